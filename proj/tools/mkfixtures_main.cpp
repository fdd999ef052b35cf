#include <filesystem>
#include <iostream>

#include "webweaver/fixtures.hpp"

// Writes the bundled offline demo corpus (scripted research run over a
// synthetic topic) into a directory, ready for `webweaver research --config`.
int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: webweaver-mkfixtures <output-dir>\n";
        return 2;
    }
    const auto config = webweaver::demo::write_fixtures(std::filesystem::path(argv[1]));
    std::cout << config.string() << "\n";
    return 0;
}
