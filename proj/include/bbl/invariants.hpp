#pragma once

// Post-run safety scans over finished traces.
//
// Each scan re-derives one protocol guarantee from the event log alone: the
// payloads that crossed the wire, the commit events, and the timer wakeups.
// Nothing here consults party internals, so a regression in a state machine
// surfaces as a concrete violation naming the offending party and step
// rather than as a silently wrong latency figure. All scans return the full
// list of violations they found; an empty vector means the trace upholds the
// guarantee.
//
// The view-based scans take the run's resilience thresholds and validity
// predicate because certificates are judged from scratch, with the same
// rules the parties themselves apply.

#include "bbl/proto_psync.hpp"
#include "bbl/rational.hpp"
#include "bbl/simnet.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace bbl {

struct Violation {
    std::string check;   // which scan fired
    std::string detail;  // what went wrong, naming parties and steps
};

inline std::string describe(const std::vector<Violation>& vs) {
    std::string out;
    for (const auto& v : vs) {
        if (!out.empty()) out += "; ";
        out += v.check + ": " + v.detail;
    }
    return out;
}

namespace detail {

inline void walk_payload(const SignedPayload& sp,
                         const std::function<void(const SignedPayload&)>& fn) {
    fn(sp);
    for (const auto& part : sp.body.parts) walk_payload(part, fn);
}

inline std::string at_step(const Event& e) {
    return " (party " + std::to_string(e.party) + ", step " + std::to_string(e.step) + ")";
}

// Distinct honest senders of view-stamped votes, keyed by (view, voted
// value). The voted value rides in the endorsed claim, not the envelope.
inline std::map<std::pair<long long, Value>, std::set<PartyId>> honest_view_votes(const Trace& tr) {
    std::map<std::pair<long long, Value>, std::set<PartyId>> out;
    for (const auto& e : tr.events) {
        if (e.kind != EventKind::Send || tr.is_byzantine[e.party]) continue;
        const SignedPayload& sp = e.payload;
        if (sp.body.tag != Tag::Vote || sp.body.view < 1) continue;
        if (sp.chain.size() != 1 || sp.chain[0].signer != e.party) continue;
        if (sp.body.parts.size() != 1) continue;
        out[{sp.body.view, sp.body.parts[0].body.value}].insert(e.party);
    }
    return out;
}

struct FastCommit {
    PartyId party = 0;
    Value value;
    std::optional<Rat> grade;  // freshness figure parsed from the wakeup tag
    int step = 0;
};

// Honest commits that fired inside a pending-commit wakeup group, recognized
// by the timer tag prefix. A "<prefix><grade>:<seq>" tag yields the exact
// rational grade the committer acted on; a "<prefix><seq>" tag yields none.
inline std::vector<FastCommit> fast_commits(const Trace& tr, const std::string& prefix) {
    std::map<int, const Event*> timer_of_group;
    for (const auto& e : tr.events)
        if (e.kind == EventKind::TimerFire) timer_of_group[e.group] = &e;
    std::vector<FastCommit> out;
    for (const auto& e : tr.events) {
        if (e.kind != EventKind::Commit || tr.is_byzantine[e.party]) continue;
        auto it = timer_of_group.find(e.group);
        if (it == timer_of_group.end()) continue;
        const std::string& tag = it->second->tag;
        if (tag.rfind(prefix, 0) != 0) continue;
        FastCommit fc;
        fc.party = e.party;
        fc.value = e.value;
        fc.step = e.step;
        std::string rest = tag.substr(prefix.size());
        auto colon = rest.find(':');
        if (colon != std::string::npos) {
            try {
                fc.grade = parse_rat(rest.substr(0, colon));
            } catch (const std::exception&) {
            }
        }
        out.push_back(fc);
    }
    return out;
}

// Every honest party whose fallback phase started must have locked `v`: its
// first-hand fallback instance message carries exactly that value. A party
// that started the fallback but sent no instance message locked nothing,
// which counts against `v`. Parties the trace cut off before their fallback
// wakeup are skipped, so short-horizon runs stay scannable.
inline std::vector<Violation> check_fallback_locks(const Trace& tr, const Value& v,
                                                   const std::string& check) {
    std::vector<Violation> out;
    std::vector<bool> began(static_cast<std::size_t>(tr.n), false);
    std::vector<std::optional<Value>> sent(static_cast<std::size_t>(tr.n));
    for (const auto& e : tr.events) {
        if (e.party < 0 || e.party >= tr.n || tr.is_byzantine[e.party]) continue;
        auto p = static_cast<std::size_t>(e.party);
        if (e.kind == EventKind::TimerFire && e.tag.rfind("ba:", 0) == 0) began[p] = true;
        if (e.kind != EventKind::Send) continue;
        const SignedPayload& sp = e.payload;
        if (sp.body.tag != Tag::BaVal || sp.body.view != e.party) continue;
        if (sp.chain.size() != 1 || sp.chain[0].signer != e.party) continue;
        if (!sent[p]) sent[p] = sp.body.value;
    }
    for (int p = 0; p < tr.n; ++p) {
        auto i = static_cast<std::size_t>(p);
        if (tr.is_byzantine[i] || !began[i]) continue;
        if (!sent[i])
            out.push_back({check, "party " + std::to_string(p) +
                                      " entered the fallback with no lock while " + v.display() +
                                      " was fast-committed"});
        else if (*sent[i] != v)
            out.push_back({check, "party " + std::to_string(p) + " entered the fallback locked on " +
                                      sent[i]->display() + " instead of " + v.display()});
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Generic commit checks, meaningful for every protocol in the library.

// All honest commits carry the same value.
inline std::vector<Violation> check_agreement(const Trace& tr) {
    std::vector<Violation> out;
    std::optional<std::pair<PartyId, Value>> first;
    for (const auto& e : tr.events) {
        if (e.kind != EventKind::Commit || tr.is_byzantine[e.party]) continue;
        if (!first) {
            first = {e.party, e.value};
            continue;
        }
        if (e.value != first->second)
            out.push_back({"agreement", "party " + std::to_string(e.party) + " committed " +
                                            e.value.display() + " but party " +
                                            std::to_string(first->first) + " committed " +
                                            first->second.display()});
    }
    return out;
}

// Every honest party commits by the end of the trace.
inline std::vector<Violation> check_all_commit(const Trace& tr) {
    std::vector<Violation> out;
    for (int p = 0; p < tr.n; ++p) {
        if (tr.is_byzantine[static_cast<std::size_t>(p)]) continue;
        if (!tr.commit_of(p))
            out.push_back({"all-commit", "party " + std::to_string(p) + " never committed"});
    }
    return out;
}

// With an honest broadcaster, every honest commit equals the broadcast input.
inline std::vector<Violation> check_committed_input(const Trace& tr, const Value& input) {
    std::vector<Violation> out;
    for (const auto& e : tr.events) {
        if (e.kind != EventKind::Commit || tr.is_byzantine[e.party]) continue;
        if (e.value != input)
            out.push_back({"committed-input", "party " + std::to_string(e.party) + " committed " +
                                                  e.value.display() + " instead of the broadcast " +
                                                  input.display()});
    }
    return out;
}

// Honest commits satisfy the external validity predicate.
inline std::vector<Violation> check_commits_valid(const Trace& tr,
                                                  const std::function<bool(const Value&)>& valid) {
    std::vector<Violation> out;
    for (const auto& e : tr.events) {
        if (e.kind != EventKind::Commit || tr.is_byzantine[e.party]) continue;
        if (!valid(e.value))
            out.push_back({"commit-validity", "party " + std::to_string(e.party) +
                                                  " committed externally invalid " + e.value.display()});
    }
    return out;
}

// ---------------------------------------------------------------------------
// View-based scans for the partially synchronous protocol.

struct ViewScanParams {
    PartyId broadcaster = 0;
    ThresholdSet th{};
    std::function<bool(const Value&)> valid;  // empty means "any non-bottom value"
};

namespace detail {
inline std::function<bool(const Value&)> normalize_validity(const ViewScanParams& ps) {
    if (ps.valid) return ps.valid;
    return [](const Value& v) { return !v.is_bottom; };
}
}  // namespace detail

// Once 3f-1 honest parties have voted one value in a view, that view is
// settled: every certificate formed for it, wherever it travels, must lock
// the quorum value, and every honest party moving past the view must carry a
// certificate of that view locking that value in its status report.
inline std::vector<Violation> scan_vote_quorum_certificates(const Trace& tr,
                                                            const ViewScanParams& ps) {
    std::vector<Violation> out;
    auto valid = detail::normalize_validity(ps);
    const int need = 3 * (ps.th.q_f1 - 1) - 1;
    for (const auto& [key, senders] : detail::honest_view_votes(tr)) {
        const auto& [w, v] = key;
        if (static_cast<int>(senders.size()) < need) continue;
        PartyId lead = view_leader(ps.broadcaster, tr.n, w);
        for (const auto& e : tr.events) {
            if (e.kind != EventKind::Send) continue;
            detail::walk_payload(e.payload, [&, w = w, v = v](const SignedPayload& part) {
                if (part.body.tag != Tag::Cert || part.body.view != w) return;
                CertEval ev = eval_cert_container(part, lead, ps.th, valid);
                if (ev.valid && !ev.locked.is_bottom && ev.locked != v)
                    out.push_back({"vote-quorum-certificates",
                                   "view " + std::to_string(w) + " certificate locks " +
                                       ev.locked.display() + " against the honest vote quorum for " +
                                       v.display() + detail::at_step(e)});
            });
            if (tr.is_byzantine[e.party]) continue;
            const SignedPayload& sp = e.payload;
            if (sp.body.tag != Tag::Status || sp.body.view != w) continue;
            if (sp.chain.size() != 1 || sp.chain[0].signer != e.party) continue;
            if (sp.body.parts.size() != 1) continue;
            CertEval ev = eval_cert_container(sp.body.parts[0], lead, ps.th, valid);
            if (!(ev.valid && ev.view == w && ev.locked == v))
                out.push_back({"vote-quorum-certificates",
                               "party " + std::to_string(e.party) + " moved past view " +
                                   std::to_string(w) + " without a certificate locking " +
                                   v.display() + detail::at_step(e)});
        }
    }
    return out;
}

// A vote quorum also settles the future: no certificate of the same or any
// later view may lock a different value, and no honest party votes for a
// different value in any later view.
inline std::vector<Violation> scan_vote_quorum_exclusivity(const Trace& tr,
                                                           const ViewScanParams& ps) {
    std::vector<Violation> out;
    auto valid = detail::normalize_validity(ps);
    const int need = 3 * (ps.th.q_f1 - 1) - 1;
    auto votes = detail::honest_view_votes(tr);
    for (const auto& [key, senders] : votes) {
        const auto& [w, v] = key;
        if (static_cast<int>(senders.size()) < need) continue;
        for (const auto& e : tr.events) {
            if (e.kind != EventKind::Send) continue;
            detail::walk_payload(e.payload, [&, w = w, v = v](const SignedPayload& part) {
                if (part.body.tag != Tag::Cert || part.body.view < w) return;
                CertEval ev = eval_cert_container(
                    part, view_leader(ps.broadcaster, tr.n, part.body.view), ps.th, valid);
                if (ev.valid && !ev.locked.is_bottom && ev.locked != v)
                    out.push_back({"vote-quorum-exclusivity",
                                   "view " + std::to_string(part.body.view) + " certificate locks " +
                                       ev.locked.display() + " after the view " + std::to_string(w) +
                                       " quorum for " + v.display() + detail::at_step(e)});
            });
        }
        for (const auto& [key2, senders2] : votes) {
            const auto& [w2, v2] = key2;
            if (w2 <= w || v2 == v || senders2.empty()) continue;
            out.push_back({"vote-quorum-exclusivity",
                           "party " + std::to_string(*senders2.begin()) + " voted " + v2.display() +
                               " in view " + std::to_string(w2) + " after the view " +
                               std::to_string(w) + " quorum for " + v.display()});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fast-path scans for the synchronous protocols.

// Graded fast commits: a commit that acted on freshness grade d is only safe
// if no honest vote at grade d or fresher backed a different value. All fast
// commits must agree, and every honest party must then enter the fallback
// agreement locked on the committed value.
inline std::vector<Violation> scan_fast_commit_grade_exclusion(const Trace& tr) {
    std::vector<Violation> out;
    auto fasts = detail::fast_commits(tr, "pc:");
    if (fasts.empty()) return out;
    const Value& v = fasts.front().value;
    for (const auto& fc : fasts)
        if (fc.value != v)
            out.push_back({"fast-commit-grade-exclusion",
                           "party " + std::to_string(fc.party) + " fast-committed " +
                               fc.value.display() + " while party " +
                               std::to_string(fasts.front().party) + " fast-committed " + v.display()});
    std::set<std::pair<PartyId, Value>> flagged;
    for (const auto& e : tr.events) {
        if (e.kind != EventKind::Send || tr.is_byzantine[e.party]) continue;
        const SignedPayload& sp = e.payload;
        if (sp.body.tag != Tag::Vote || sp.body.parts.size() != 1) continue;
        if (sp.chain.size() != 1 || sp.chain[0].signer != e.party) continue;
        const Value& voted = sp.body.parts[0].body.value;
        for (const auto& fc : fasts) {
            if (!fc.grade || sp.body.rtime > *fc.grade || voted == fc.value) continue;
            if (!flagged.insert({e.party, voted}).second) continue;
            out.push_back({"fast-commit-grade-exclusion",
                           "party " + std::to_string(e.party) + " voted " + voted.display() +
                               " at grade " + format_rat(sp.body.rtime) +
                               " although grade " + format_rat(*fc.grade) + " fast-committed " +
                               fc.value.display() + detail::at_step(e)});
        }
    }
    auto locks = detail::check_fallback_locks(tr, v, "fast-commit-grade-exclusion");
    out.insert(out.end(), locks.begin(), locks.end());
    return out;
}

// Ungraded fast commits: all of them must carry one value, and every honest
// party must enter the fallback agreement locked on it.
inline std::vector<Violation> scan_fast_commit_lock_agreement(const Trace& tr) {
    std::vector<Violation> out;
    auto fasts = detail::fast_commits(tr, "fc:");
    if (fasts.empty()) return out;
    const Value& v = fasts.front().value;
    for (const auto& fc : fasts)
        if (fc.value != v)
            out.push_back({"fast-commit-lock-agreement",
                           "party " + std::to_string(fc.party) + " fast-committed " +
                               fc.value.display() + " while party " +
                               std::to_string(fasts.front().party) + " fast-committed " + v.display()});
    auto locks = detail::check_fallback_locks(tr, v, "fast-commit-lock-agreement");
    out.insert(out.end(), locks.begin(), locks.end());
    return out;
}

}  // namespace bbl
