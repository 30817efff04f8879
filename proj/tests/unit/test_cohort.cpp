#include <doctest.h>

#include <sstream>

#include "eca/cohort.hpp"
#include "eca/error.hpp"
#include "fixtures.hpp"

using namespace eca;
using fixtures::cohort_from;

TEST_CASE("three rows for one patient give one patient with three lines") {
    const Cohort c = cohort_from(
        "P1,RW,1,2014-01-01,1,60,II,CR,2014-02-01,,,,2014-06-01\n"
        "P1,RW,2,2014-07-01,1,61,II,,,,,,2014-09-01\n"
        "P1,RW,3,2014-10-01,0,61,II,PD,2014-11-01,2014-11-01,,,2015-01-01\n");
    REQUIRE(c.patients.size() == 1);
    CHECK(c.patients[0].lines.size() == 3);
    CHECK(c.patients[0].arm == Arm::ExternalControl);
    CHECK(c.covariate_names == std::vector<std::string>{"age", "stage"});
    CHECK(c.patients[0].lines[0].best_response == BestResponse::CR);
    CHECK_FALSE(c.patients[0].lines[1].best_response.has_value());
}

TEST_CASE("duplicate patient and line is a parse error naming the row") {
    try {
        cohort_from(
            "P1,RW,1,2014-01-01,1,60,II,,,,,,2014-06-01\n"
            "P1,RW,2,2014-07-01,1,61,II,,,,,,2014-09-01\n"
            "P1,RW,2,2014-10-01,1,61,II,,,,,,2015-01-01\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
        CHECK(std::string(e.what()).find("P1") != std::string::npos);
        CHECK(e.kind() == "parse_error");
    }
}

TEST_CASE("trial patient with two rows violates the schema") {
    CHECK_THROWS_AS(cohort_from("T1,TRIAL,3,2014-01-01,1,60,II,,,,,,2014-06-01\n"
                                "T1,TRIAL,4,2014-07-01,1,61,II,,,,,,2014-09-01\n"),
                    SchemaError);
}

TEST_CASE("malformed input is rejected") {
    CHECK_THROWS_AS(cohort_from("P1,XX,1,2014-01-01,1,60,II,,,,,,2014-06-01\n"), ParseError);
    CHECK_THROWS_AS(cohort_from("P1,RW,1,2014-02-30,1,60,II,,,,,,2014-06-01\n"), ParseError);
    CHECK_THROWS_AS(cohort_from("P1,RW,1,2014-01-01,1,60,II,,,,,,2013-06-01\n"), ParseError);
    CHECK_THROWS_AS(cohort_from("P1,RW,0,2014-01-01,1,60,II,,,,,,2014-06-01\n"), ParseError);
    CHECK_THROWS_AS(cohort_from("P1,RW,1,2014-01-01,1,60,II,,,,,\n"), ParseError);
    CHECK_THROWS_AS(cohort_from("P1,RW,1,2014-01-01,1,60,II,,,,,,2014-06-01\n"
                                "P1,TRIAL,2,2014-07-01,1,61,II,,,,,,2014-09-01\n"),
                    SchemaError);
}

TEST_CASE("eligible lines") {
    PatientRecord p;
    for (int k = 1; k <= 3; ++k) {
        LineRecord l;
        l.line_number = k;
        l.eligible = k != 1;
        p.lines.push_back(l);
    }
    CHECK(eligible_lines(p) == std::vector<int>{2, 3});
    for (auto& l : p.lines) l.eligible = false;
    CHECK(eligible_lines(p).empty());
    p.lines.resize(1);
    p.lines[0].eligible = true;
    CHECK(eligible_lines(p) == std::vector<int>{1});
}

TEST_CASE("parse, write and parse again is the identity") {
    const std::string body =
        "T1,TRIAL,3,2014-01-01,1,60.5,II,PR,2014-02-01,2014-05-01,2014-04-01,,2014-06-01\n"
        "P1,RW,1,2014-01-01,1,60,\"III, bulky\",UNK,,,,2015-01-01,2015-01-01\n"
        "P1,RW,2,2014-07-01,0,,II,SD,2014-08-01,,,,2014-09-01\n";
    const Cohort a = cohort_from(body);
    std::ostringstream out;
    write_cohort(out, a);
    std::istringstream in(out.str());
    const Cohort b = parse_cohort(in);
    std::ostringstream again;
    write_cohort(again, b);
    CHECK(out.str() == again.str());
    CHECK(b.patients[1].lines[0].covariates.values[1] == "III, bulky");
    CHECK(b.patients[1].lines[0].best_response == BestResponse::Unknown);
}

TEST_CASE("complete-case filtering") {
    const std::string base =
        "T1,TRIAL,3,2014-01-01,1,60,II,,,,,,2014-06-01\n"
        "T2,TRIAL,3,2014-01-01,1,61,III,,,,,,2014-06-01\n"
        "P1,RW,1,2014-01-01,1,60,II,,,,,,2014-06-01\n"
        "P1,RW,2,2014-07-01,1,62,II,,,,,,2014-09-01\n"
        "P1,RW,3,2014-10-01,1,63,II,,,,,,2015-01-01\n";
    const std::vector<std::string> covs = {"age", "stage"};

    SUBCASE("no missingness is the identity") {
        const Cohort c = cohort_from(base);
        auto [out, report] = complete_case_filter(c, covs);
        CHECK(report.empty());
        std::ostringstream a, b;
        write_cohort(a, c);
        write_cohort(b, out);
        CHECK(a.str() == b.str());
    }
    SUBCASE("a trial patient missing stage is excluded") {
        std::string body = base;
        body.replace(body.find("61,III"), 6, "61,");
        auto [out, report] = complete_case_filter(cohort_from(body), covs);
        CHECK(report.patients_dropped_trial == 1);
        CHECK(report.patients_dropped_external == 0);
        CHECK(out.count(Arm::Trial) == 1);
    }
    SUBCASE("a missing value on one external line drops only that line") {
        std::string body = base;
        body.replace(body.find("62,II"), 5, ",II");
        auto [out, report] = complete_case_filter(cohort_from(body), covs);
        CHECK(report.lines_dropped_external == 1);
        CHECK(report.patients_dropped_external == 0);
        const auto& p = out.patients.back();
        CHECK(eligible_lines(p) == std::vector<int>{1, 3});
        auto [again, second] = complete_case_filter(out, covs);
        CHECK(second.empty());
    }
    SUBCASE("emptying an arm is fatal") {
        std::string body = base;
        body.replace(body.find("60,II"), 5, ",II");
        body.replace(body.find("61,III"), 6, ",III");
        CHECK_THROWS_AS(complete_case_filter(cohort_from(body), covs), ConfigError);
    }
}
