#include "fbjet/output.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "fbjet/numerics.hpp"

namespace fbjet {

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DomainError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw DomainError("write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw DomainError("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                      ec.message());
  }
}

void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer) {
  std::ostringstream out;
  writer(out);
  write_atomic(path, out.str());
}

std::filesystem::path output_directory(const std::string& configured) {
  if (const char* env = std::getenv("FBJET_OUTPUT_DIR"); env && *env) return env;
  return configured;
}

std::string report_text(const nlohmann::json& report) { return report.dump(2) + "\n"; }

}  // namespace fbjet
