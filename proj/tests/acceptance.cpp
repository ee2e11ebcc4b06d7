// One line per acceptance criterion; exit status 4 if any fails.

#include <iostream>

#include "bcw/app/checks.hpp"

int main() {
    bcw::CheckOptions opts;
    int failed = 0;
    const auto results = bcw::run_all_checks(opts, [&](const bcw::CheckResult& r) {
        std::cout << bcw::format_check(r) << std::endl;
        if (!r.passed) ++failed;
    });
    std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 4;
}
