//! Holds the `acceptance` test target, which prints one PASS/FAIL line per
//! check. It lives in its own package so that the other suites still run when
//! a check fails.
