#include "doctest.h"

#include <string>

#include "abf/acceptance.hpp"
#include "abf/errors.hpp"

using namespace abf;

TEST_CASE("suite names round-trip") {
    CHECK(suite_from_name("fast") == Suite::Fast);
    CHECK(suite_from_name("full") == Suite::Full);
    CHECK(suite_name(Suite::Fast) == "fast");
    CHECK(suite_name(Suite::Full) == "full");
    CHECK_THROWS_AS(suite_from_name("leisurely"), ConfigError);
}

TEST_CASE("single-criterion run reports one entry with metrics") {
    AcceptanceOptions opts;
    opts.only_criterion = 9;
    opts.threads = 2;
    const AcceptanceReport rep = run_acceptance(opts);
    REQUIRE(rep.results.size() == 1);
    const CriterionResult& r = rep.results[0];
    CHECK(r.id == 9);
    CHECK(r.name == "inequality-verifiers");
    CHECK(r.passed);
    CHECK(rep.all_passed);
    CHECK(r.seconds > 0.0);
    CHECK(r.detail.find("nash_t1_worst=") != std::string::npos);
    CHECK(r.detail.find("slack_threshold=") != std::string::npos);

    const std::string text = format_report(rep);
    CHECK(text.find("criterion=9 status=PASS name=inequality-verifiers") != std::string::npos);
    CHECK(text.find("passed=1 failed=0") != std::string::npos);
}

TEST_CASE("tamper hook forces the named criterion to fail in isolation") {
    AcceptanceOptions opts;
    opts.only_criterion = 9;
    opts.tamper_criterion = 9;
    opts.threads = 2;
    const AcceptanceReport rep = run_acceptance(opts);
    REQUIRE(rep.results.size() == 1);
    CHECK_FALSE(rep.results[0].passed);
    CHECK_FALSE(rep.all_passed);
    const std::string text = format_report(rep);
    CHECK(text.find("status=FAIL") != std::string::npos);
}
