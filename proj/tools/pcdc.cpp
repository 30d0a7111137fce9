// SPDX-License-Identifier: Apache-2.0
#include <pcdc/cli/app.hpp>

#include <iostream>

int main(int argc, char **argv) { return pcdc::cli::run(argc, argv, std::cout, std::cerr); }
