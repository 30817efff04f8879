#include "eca/outcome.hpp"

#include <algorithm>

#include "eca/error.hpp"

namespace eca {

std::string_view to_string(ResponseOutcome r) {
    switch (r) {
        case ResponseOutcome::Responder: return "responder";
        case ResponseOutcome::NonResponder: return "non_responder";
        case ResponseOutcome::Unevaluable: return "unevaluable";
    }
    return "?";
}

namespace {

double months_since_start(const LineRecord& line, Date d, std::string_view what) {
    const auto days = d - line.line_start;
    if (days < 0)
        throw DataError("patient " + line.patient_id + " line " + std::to_string(line.line_number) + ": " +
                        std::string(what) + " precedes line_start");
    return days_to_months(static_cast<double>(days));
}

std::optional<Date> earliest(std::optional<Date> a, std::optional<Date> b) {
    if (!a) return b;
    if (!b) return a;
    return std::min(*a, *b);
}

}  // namespace

ResponseOutcome derive_response(const LineRecord& line, Endpoint endpoint) {
    if (!is_binary(endpoint)) throw DomainError("derive_response needs a binary endpoint");
    if (!line.best_response || *line.best_response == BestResponse::Unknown) return ResponseOutcome::Unevaluable;

    const BestResponse r = *line.best_response;
    const bool qualifies = r == BestResponse::CR || (endpoint == Endpoint::ORR && r == BestResponse::PR);
    if (!qualifies) return ResponseOutcome::NonResponder;

    // Undated responses cannot be ordered against intercurrent events and are taken as recorded.
    if (!line.response_date) return ResponseOutcome::Responder;
    const Date when = *line.response_date;
    if (line.new_therapy_date && !(when < *line.new_therapy_date)) return ResponseOutcome::NonResponder;
    if (line.progression_date && !(when < *line.progression_date)) return ResponseOutcome::NonResponder;
    return ResponseOutcome::Responder;
}

TimeToEvent derive_pfs(const LineRecord& line, IntercurrentStrategy strategy) {
    if (strategy != IntercurrentStrategy::HypotheticalCensor && strategy != IntercurrentStrategy::CompositeEvent)
        throw DomainError("PFS admits HypotheticalCensor or CompositeEvent only");

    const auto event = earliest(line.progression_date, line.death_date);
    const auto& nt = line.new_therapy_date;
    if (nt && (!event || *nt < *event)) {
        return {months_since_start(line, *nt, "new_therapy_date"),
                strategy == IntercurrentStrategy::CompositeEvent};
    }
    if (event) return {months_since_start(line, *event, "progression/death date"), true};
    return {months_since_start(line, line.last_contact_date, "last_contact_date"), false};
}

TimeToEvent derive_os(const LineRecord& line) {
    if (line.death_date) return {months_since_start(line, *line.death_date, "death_date"), true};
    return {months_since_start(line, line.last_contact_date, "last_contact_date"), false};
}

TimeToEvent apply_admin_censor(TimeToEvent tte, double cutoff_months) {
    if (!(cutoff_months > 0)) throw DomainError("administrative cutoff must be positive");
    if (tte.time_months > cutoff_months) return {cutoff_months, false};
    return tte;
}

TimeToEvent derive_time_to_event(const LineRecord& line, const EstimandSpec& estimand) {
    TimeToEvent tte;
    switch (estimand.endpoint) {
        case Endpoint::OS: tte = derive_os(line); break;
        case Endpoint::PFS: tte = derive_pfs(line, estimand.strategy); break;
        default: throw DomainError("endpoint " + std::string(to_string(estimand.endpoint)) + " is not time-to-event");
    }
    if (estimand.admin_cutoff_months) tte = apply_admin_censor(tte, *estimand.admin_cutoff_months);
    return tte;
}

}  // namespace eca
