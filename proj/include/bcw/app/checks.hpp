#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace bcw {

struct CheckResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::vector<std::pair<std::string, double>> metrics;
    std::string detail;
    double seconds = 0.0;
};

struct CheckOptions {
    int workers = 1;
};

CheckResult check_dalembert(const CheckOptions& o);
CheckResult check_energy(const CheckOptions& o);
CheckResult check_finite_speed(const CheckOptions& o);
CheckResult check_travel_time(const CheckOptions& o);
CheckResult check_connecting(const CheckOptions& o);
CheckResult check_control(const CheckOptions& o);
CheckResult check_reconstruction(const CheckOptions& o);
CheckResult check_wkb(const CheckOptions& o);
CheckResult check_fourier_slicing(const CheckOptions& o);
CheckResult check_structural(const CheckOptions& o);

/// All criteria in order; on_result sees each as soon as it finishes.
std::vector<CheckResult> run_all_checks(const CheckOptions& o,
                                        const std::function<void(const CheckResult&)>& on_result = {});

/// "PASS [n] name: key=value ..." on one line.
std::string format_check(const CheckResult& r);

nlohmann::json checks_to_json(const std::vector<CheckResult>& results);

} // namespace bcw
