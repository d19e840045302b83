// Self-check for the acceptance oracles, built with the kernel deliberately
// corrupted at its peak (FDSMOOTH_FAULT_KERNEL_AT_ZERO). Affine reproduction
// is invariant to the kernel, so it must still pass; the independent
// least-squares oracle computes its own kernel values, so it must fail.
// If either expectation breaks, the oracles have lost their teeth.

#ifndef FDSMOOTH_FAULT_KERNEL_AT_ZERO
#error "this binary only makes sense with the kernel fault enabled"
#endif

#include <cstdio>

#include "fdsmooth/verify.hpp"

int main() {
    using namespace fdsmooth;

    const VerifyOptions opt;
    const CriterionResult affine = run_criterion(1, opt);
    const CriterionResult oracle = run_criterion(2, opt);

    bool ok = true;
    auto expect = [&ok](const CriterionResult& r, bool want_pass) {
        const bool good = r.pass == want_pass;
        std::printf("%s  %-36s wanted %s, got %s  (%s)\n", good ? "OK  " : "BAD ",
                    r.name.c_str(), want_pass ? "pass" : "fail", r.pass ? "pass" : "fail",
                    r.detail.c_str());
        ok = ok && good;
    };

    expect(affine, true);   // blind to kernel corruption by design
    expect(oracle, false);  // must notice the corrupted peak

    std::printf("%s\n", ok ? "fault injection behaves as documented"
                           : "FAULT INJECTION CHECK FAILED");
    return ok ? 0 : 1;
}
