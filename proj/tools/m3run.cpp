#include <cstdio>
#include <string>
#include <vector>

#include "m3/error.hpp"
#include "m3/linker.hpp"
#include "m3/vfs.hpp"
#include "m3/vm.hpp"

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: m3run <image> <entry> [ints...]\n");
        return 64;
    }
    std::vector<int64_t> args;
    for (int i = 3; i < argc; ++i) {
        try {
            size_t used = 0;
            args.push_back(std::stoll(argv[i], &used));
            if (argv[i][used] != '\0')
                throw std::invalid_argument(argv[i]);
        } catch (const std::exception&) {
            std::fprintf(stderr, "m3run: not an integer: %s\n", argv[i]);
            return 64;
        }
    }
    try {
        m3::Vfs vfs;
        std::optional<std::string> bytes = vfs.read(argv[1]);
        if (!bytes) {
            std::fprintf(stderr, "m3run: cannot read image: %s\n", argv[1]);
            return 1;
        }
        m3::Image image = m3::decode_image(*bytes);
        m3::VmResult result = m3::load_and_run(image, argv[2], args);
        std::printf("%lld\n", static_cast<long long>(result.value));
        return 0;
    } catch (const m3::Error& e) {
        std::fprintf(stderr, "m3run: %s\n", m3::format_diagnostic(e).c_str());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "m3run: error: %s\n", e.what());
        return 1;
    }
}
