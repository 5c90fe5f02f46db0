#include <csignal>
#include <iostream>

#include "smartmars/app/cli.hpp"

namespace {

std::atomic<bool> interrupted{false};

extern "C" void on_signal(int) { interrupted = true; }

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::vector<std::string> args(argv + 1, argv + argc);
    return smartmars::app::run_cli(args, std::cout, std::cerr, &interrupted);
}
