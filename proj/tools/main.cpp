#include "mixmemb/cli.hpp"

int main(int argc, char** argv) { return mixmemb::cli_main(argc, argv); }
