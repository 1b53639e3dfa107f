#include "pinn/io.hpp"

#include <fstream>
#include <sstream>

namespace pinn::io {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string() + " for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoFailure("read error on " + path.string());
    return std::move(buffer).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoFailure("cannot create directory " + path.parent_path().string());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoFailure("write error on " + path.string());
}

}  // namespace pinn::io
