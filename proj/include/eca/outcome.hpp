#pragma once

#include "eca/cohort.hpp"
#include "eca/plan.hpp"

namespace eca {

struct TimeToEvent {
    double time_months = 0.0;
    bool event = false;

    bool operator==(const TimeToEvent&) const = default;
};

enum class ResponseOutcome { Responder, NonResponder, Unevaluable };

std::string_view to_string(ResponseOutcome r);

// Qualifying response (CR; CR or PR for ORR) dated strictly before any new
// therapy and any progression. Missing or UNK best response is unevaluable.
ResponseOutcome derive_response(const LineRecord& line, Endpoint endpoint);

// Time origin is line_start. Progression and death are events; a new therapy
// strictly before both censors (HypotheticalCensor) or is itself the event
// (CompositeEvent). Same-day progression and new therapy count as progression.
TimeToEvent derive_pfs(const LineRecord& line, IntercurrentStrategy strategy);

// Death from any cause, new therapy ignored.
TimeToEvent derive_os(const LineRecord& line);

// Times beyond the cutoff become (cutoff, censored); the boundary is kept.
TimeToEvent apply_admin_censor(TimeToEvent tte, double cutoff_months);

// Endpoint dispatch including administrative censoring from the estimand.
TimeToEvent derive_time_to_event(const LineRecord& line, const EstimandSpec& estimand);

}  // namespace eca
