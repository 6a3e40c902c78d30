// Copyright 2026-present the lmforge project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pthread.h>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "lmforge/cli/cli.hpp"

int main(int argc, char** argv) {
    // SIGINT/SIGTERM go to a watcher thread: a running server shuts down
    // cleanly, anything else exits at once.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    std::thread([set] {
        int sig = 0;
        sigwait(&set, &sig);
        if (!lmforge::cli::serving()) std::_Exit(128 + sig);
        lmforge::cli::request_shutdown();
    }).detach();

    std::vector<std::string> args(argv + 1, argv + argc);
    return lmforge::cli::run(args, std::cout, std::cerr);
}
