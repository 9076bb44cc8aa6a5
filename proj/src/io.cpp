#include "homog/io.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include "homog/core.hpp"

namespace homog {

void atomic_write(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot open " + tmp.string() + " for writing");
        writer(os);
        os.flush();
        if (!os) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex;
    for (int i = 15; i >= 0; --i) os << ((h >> (4 * i)) & 0xF);
    return os.str();
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
    atomic_write(path, [&](std::ostream& os) {
        os << "{\n"
           << "  \"experiment\": \"" << m.experiment << "\",\n"
           << "  \"config_hash\": \"" << m.config_hash << "\",\n"
           << "  \"tool_version\": \"" << m.tool_version << "\",\n"
           << "  \"wall_seconds\": " << m.wall_seconds << "\n"
           << "}\n";
    });
}

}  // namespace homog
