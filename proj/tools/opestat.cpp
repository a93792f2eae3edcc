#include "ope/experiment.hpp"

int main(int argc, char** argv) { return ope::cli_main(argc, argv); }
