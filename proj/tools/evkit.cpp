#include "evkit/cli.hpp"

int main(int argc, char** argv) { return evkit::cli_main(argc, argv); }
