#include "cavitylc/cli.hpp"

int main(int argc, char** argv) { return cavitylc::cli_main(argc, argv); }
