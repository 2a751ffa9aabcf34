#include "lindy/cli.hpp"

int main(int argc, char** argv) { return lindy::run_cli(argc, argv); }
