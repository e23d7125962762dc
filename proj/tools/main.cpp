#include "ipsk/cli.hpp"

int main(int argc, char** argv) { return ipsk::cli::run(argc, argv); }
