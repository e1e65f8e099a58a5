#include "skewcast/cli.hpp"

int main(int argc, char** argv) { return skewcast::run_cli(argc, argv); }
