#include "dia/cli.hpp"

int main(int argc, char** argv) { return dia::cli_main(argc, argv); }
