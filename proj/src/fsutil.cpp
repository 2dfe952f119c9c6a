#include "roadscope/fsutil.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>

#include "roadscope/error.hpp"

namespace roadscope {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open: " + path.string());
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(Errc::io_error, "read failed: " + path.string());
    return s;
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) fail(Errc::io_error, "read failed: " + path.string());
    return bytes;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot open for writing: " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(Errc::io_error, "write failed: " + path.string());
}

void write_binary_file(const std::filesystem::path& path, const void* data, std::size_t len) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot open for writing: " + path.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    if (!out) fail(Errc::io_error, "write failed: " + path.string());
}

std::string utc_timestamp() {
    std::time_t t;
    if (const char* e = std::getenv("SOURCE_DATE_EPOCH")) {
        t = static_cast<std::time_t>(std::strtoll(e, nullptr, 10));
    } else {
        t = std::time(nullptr);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace roadscope
