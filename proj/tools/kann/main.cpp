#include "kann/cli.hpp"

int main(int argc, char **argv) { return kann::cli::run(argc, argv); }
