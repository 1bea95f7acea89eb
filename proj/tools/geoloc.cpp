#include <geoloc/cli.hpp>

int main(int argc, char** argv) {
    return geoloc::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
