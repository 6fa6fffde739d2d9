// Runs every end-to-end criterion at the default parameters and prints one
// PASS/FAIL line each. Exit status is 0 only when all pass.

#include <cstdio>

#include "wtank/acceptance.hpp"

int main() {
    const wtank::Params p;
    int failed = 0;
    for (int id = 1; id <= wtank::criterion_count; ++id) {
        const auto t0 = wtank::accept::clock::now();
        const wtank::CriterionResult r = wtank::run_criterion(id, p);
        const double secs = wtank::accept::seconds_since(t0);
        if (!r.pass) ++failed;
        std::printf("%s  criterion %2d  %-32s value=%.3e tol=%.3e  (%.1f s)  %s\n", r.pass ? "PASS" : "FAIL", id,
                    r.name.c_str(), r.value, r.tolerance, secs, r.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed\n", wtank::criterion_count - failed, wtank::criterion_count);
    return failed == 0 ? 0 : 1;
}
