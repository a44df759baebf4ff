#include "fairkit/cli.hpp"

int main(int argc, char** argv) {
    return fairkit::run_cli(argc, argv);
}
