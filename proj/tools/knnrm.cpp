#include "knnrm_cli.hpp"

int main(int argc, char** argv) { return knnrm::cli::run(argc, argv); }
