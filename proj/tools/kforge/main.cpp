#include "kforge/cli.hpp"

int main(int argc, char** argv) { return kforge::run_cli(argc, argv); }
