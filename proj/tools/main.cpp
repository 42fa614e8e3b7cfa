#include "conewalk/cli.hpp"

int main(int argc, char** argv) { return conewalk::run_cli(argc, argv); }
