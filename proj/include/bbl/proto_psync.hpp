#pragma once

// View-based validated broadcast for n >= 5f-1 under partial synchrony.
//
// Views rotate through leaders starting at the designated broadcaster. Within
// a view: the leader proposes with a justification, parties vote by
// countersigning the leader's value, and 4f-1 votes commit. A view that
// stalls times out after 4*Delta; 4f-1 timeouts justify moving on, and the
// timeout signatures themselves can form a certificate that carries the
// strongest locked value forward. Leaders of later views justify their
// proposal either with such a certificate or with 4f-1 status reports whose
// strongest certificate backs the proposed value.
//
// Certificates intentionally hold exactly 4f-1 signatures: at that size two
// different values can never both satisfy a lock rule, which is what makes
// "the value this certificate locks" well defined.

#include "bbl/simnet.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace bbl {

// ---------------------------------------------------------------------------
// Certificates

struct CertStatus {
    enum class Kind { Invalid, ValidNoLock, ValidLocks };
    Kind kind = Kind::Invalid;
    Value locked;        // meaningful for ValidLocks
    std::string reason;  // meaningful for Invalid
};

// Judges a flat set of view-w signature messages: each entry must be either
// <bottom, w> self-signed by its reporter or <v, w> signed by the view's
// leader and countersigned by the reporter. A value locks when it has
// 2f-1 leader-signed entries and no rival, or 2f entries countersigned by
// parties other than the leader (rivals notwithstanding).
inline CertStatus check_certificate(const std::vector<SignedPayload>& entries, long long w,
                                    PartyId leader, const ThresholdSet& th,
                                    const std::function<bool(const Value&)>& valid) {
    CertStatus st;
    std::set<PartyId> reporters;
    std::map<Value, std::set<PartyId>> backing;  // non-bottom value -> reporters
    std::map<Value, int> non_leader_backing;
    for (const auto& e : entries) {
        if (!verify_chain(e)) return {CertStatus::Kind::Invalid, {}, "bad signature chain"};
        if (e.body.tag != Tag::ValView || e.body.view != w)
            return {CertStatus::Kind::Invalid, {}, "entry is not a view-" + std::to_string(w) + " value claim"};
        PartyId reporter = e.chain.back().signer;
        if (!reporters.insert(reporter).second)
            return {CertStatus::Kind::Invalid, {}, "duplicate reporter"};
        if (e.body.value.is_bottom) {
            if (e.chain.size() != 1)
                return {CertStatus::Kind::Invalid, {}, "bottom claim must be self-signed only"};
        } else {
            if (e.chain.size() != 2 || e.chain[0].signer != leader)
                return {CertStatus::Kind::Invalid, {}, "value claim must be leader-signed then countersigned"};
            if (!valid(e.body.value))
                return {CertStatus::Kind::Invalid, {}, "externally invalid value"};
            backing[e.body.value].insert(reporter);
            if (reporter != leader) ++non_leader_backing[e.body.value];
        }
    }
    if (static_cast<int>(reporters.size()) < th.q_cert)
        return {CertStatus::Kind::Invalid, {}, "needs " + std::to_string(th.q_cert) + " distinct reporters"};
    for (const auto& [v, backers] : backing) {
        bool sole = backing.size() == 1;
        if (sole && static_cast<int>(backers.size()) >= th.q_lock_lo)
            return {CertStatus::Kind::ValidLocks, v, {}};
        if (non_leader_backing[v] >= th.q_lock_hi)
            return {CertStatus::Kind::ValidLocks, v, {}};
    }
    return {CertStatus::Kind::ValidNoLock, {}, {}};
}

// A certificate travels as a container: Empty for the primordial view-0
// certificate (locks any externally valid value), or Cert with the signature
// entries as parts.
struct CertEval {
    bool valid = false;
    long long view = 0;
    bool locks_any = false;  // the Empty certificate
    Value locked;            // non-bottom when a specific value locks
};

inline SignedPayload empty_cert() {
    Msg m;
    m.tag = Tag::Empty;
    return unsigned_container(std::move(m));
}

// Views rotate leadership round-robin starting from the designated
// broadcaster, who owns view 1. Exposed so trace-level checks can evaluate a
// certificate of any view without instantiating a party.
inline PartyId view_leader(PartyId broadcaster, int n, long long w) {
    long long idx = (broadcaster + w - 1) % n;
    if (idx < 0) idx += n;
    return static_cast<PartyId>(idx);
}

inline CertEval eval_cert_container(const SignedPayload& c, PartyId leader_of_its_view,
                                    const ThresholdSet& th,
                                    const std::function<bool(const Value&)>& valid) {
    CertEval ev;
    if (c.body.tag == Tag::Empty && c.chain.empty() && c.body.parts.empty()) {
        ev.valid = true;
        ev.view = 0;
        ev.locks_any = true;
        return ev;
    }
    if (c.body.tag != Tag::Cert || !c.chain.empty()) return ev;
    CertStatus st = check_certificate(c.body.parts, c.body.view, leader_of_its_view, th, valid);
    if (st.kind == CertStatus::Kind::Invalid) return ev;
    ev.valid = true;
    ev.view = c.body.view;
    if (st.kind == CertStatus::Kind::ValidLocks) ev.locked = st.locked;
    return ev;
}

// ---------------------------------------------------------------------------
// The protocol

class PsyncVbbParty : public IParty {
  public:
    explicit PsyncVbbParty(Value input = Value::bottom(), bool act_as_leader = true)
        : input_(std::move(input)), act_as_leader_(act_as_leader) {}

    void on_start(Ctx& ctx, Actions& out) override {
        view_ = 1;
        out.timer("to:1", ctx.Delta * 4);
        if (ctx.self == leader_of(ctx, 1) && act_as_leader_) {
            SignedPayload inner = sign_claim(ctx, input_, 1);
            propose(ctx, 1, inner, empty_cert(), out);
        }
    }

    void on_deliver(Ctx& ctx, PartyId, const SignedPayload& sp, Actions& out) override {
        if (committed_ || !verify_chain(sp)) return;
        note_leader_values(ctx, sp);
        ingest(ctx, sp, out);
    }

    void on_timer(Ctx& ctx, const std::string& tag, Actions& out) override {
        if (committed_ || tag.rfind("to:", 0) != 0) return;
        long long w = std::stoll(tag.substr(3));
        if (view_ != w || timed_out_.count(w)) return;
        send_timeout(ctx, w, out);
    }

  private:
    static PartyId leader_of(const Ctx& ctx, long long w) {
        return view_leader(ctx.broadcaster, ctx.n, w);
    }

    static std::function<bool(const Value&)> validator(Ctx& ctx) {
        return [&ctx](const Value& v) { return ctx.externally_valid(v); };
    }

    SignedPayload sign_claim(Ctx& ctx, const Value& v, long long w) {
        Msg m;
        m.tag = Tag::ValView;
        m.value = v;
        m.view = w;
        return ctx.sign(std::move(m));
    }

    // Tracks every value the view's leader has signed, however it arrived;
    // two distinct values is proof of equivocation and stops our vote.
    void note_leader_values(const Ctx& ctx, const SignedPayload& sp) {
        walk_claims(ctx, sp);
    }

    void walk_claims(const Ctx& ctx, const SignedPayload& sp) {
        if (sp.body.tag == Tag::ValView && !sp.body.value.is_bottom && !sp.chain.empty() &&
            sp.chain[0].signer == leader_of(ctx, sp.body.view)) {
            auto& seen = leader_values_[sp.body.view];
            seen.insert(sp.body.value);
            if (seen.size() >= 2) stopped_voting_.insert(sp.body.view);
        }
        for (const auto& part : sp.body.parts) walk_claims(ctx, part);
    }

    void ingest(Ctx& ctx, const SignedPayload& sp, Actions& out) {
        switch (sp.body.tag) {
            case Tag::Bundle:
                if (!sp.chain.empty()) return;
                for (const auto& part : sp.body.parts) {
                    if (committed_) return;
                    if (!verify_chain(part)) continue;
                    ingest(ctx, part, out);
                }
                return;
            case Tag::Propose:
                handle_proposal(ctx, sp, out);
                return;
            case Tag::Vote:
                handle_vote(ctx, sp, out);
                return;
            case Tag::Timeout:
                handle_timeout(ctx, sp, out);
                return;
            case Tag::Status:
                handle_status(ctx, sp, out);
                return;
            default:
                return;
        }
    }

    // --- proposals and votes -------------------------------------------

    void handle_proposal(Ctx& ctx, const SignedPayload& sp, Actions& out) {
        long long w = sp.body.view;
        if (w > view_) {
            buffered_proposals_.emplace(w, sp);  // keeps the first only
            return;
        }
        if (w < view_) return;
        try_vote(ctx, sp, out);
    }

    void try_vote(Ctx& ctx, const SignedPayload& sp, Actions& out) {
        long long w = sp.body.view;
        if (voted_.count(w) || stopped_voting_.count(w) || timed_out_.count(w)) return;
        if (!proposal_is_valid(ctx, sp)) return;
        const SignedPayload& inner = sp.body.parts[0];
        SignedPayload endorsed = ctx.countersign(inner);
        voted_.emplace(w, endorsed);
        Msg m;
        m.tag = Tag::Vote;
        m.view = w;
        m.parts.push_back(std::move(endorsed));
        out.multicast(ctx.n, ctx.sign(std::move(m)));
    }

    bool proposal_is_valid(Ctx& ctx, const SignedPayload& sp) {
        long long w = sp.body.view;
        PartyId lead = leader_of(ctx, w);
        if (sp.chain.size() != 1 || sp.chain[0].signer != lead) return false;
        if (sp.body.parts.size() != 2) return false;
        const SignedPayload& inner = sp.body.parts[0];
        const SignedPayload& just = sp.body.parts[1];
        if (inner.body.tag != Tag::ValView || inner.body.view != w) return false;
        if (inner.chain.size() != 1 || inner.chain[0].signer != lead) return false;
        const Value& v = inner.body.value;
        if (v.is_bottom || !ctx.externally_valid(v)) return false;
        if (w == 1) return just.body.tag == Tag::Empty;
        const auto valid = validator(ctx);
        if (just.body.tag == Tag::Cert) {
            if (just.body.view != w - 1) return false;
            CertEval ev = eval_cert_container(just, leader_of(ctx, w - 1), ctx.th, valid);
            return ev.valid && ev.locked == v;
        }
        if (just.body.tag == Tag::StatusSet) {
            std::vector<CertEval> certs;
            std::set<PartyId> senders;
            for (const auto& st : just.body.parts) {
                auto ev = eval_status(ctx, st, w - 1);
                if (!ev) return false;
                if (!senders.insert(st.chain[0].signer).second) return false;
                certs.push_back(*ev);
            }
            if (static_cast<int>(senders.size()) < ctx.th.q_cert) return false;
            long long high = 0;
            for (const auto& ev : certs) high = std::max(high, ev.view);
            if (high == 0) return true;  // nothing locked anywhere; any valid value goes
            for (const auto& ev : certs)
                if (ev.view == high && !ev.locks_any && ev.locked == v) return true;
            return false;
        }
        return false;
    }

    void handle_vote(Ctx& ctx, const SignedPayload& sp, Actions& out) {
        long long w = sp.body.view;
        if (sp.chain.size() != 1 || sp.body.parts.size() != 1) return;
        PartyId voter = sp.chain[0].signer;
        const SignedPayload& claim = sp.body.parts[0];
        if (claim.body.tag != Tag::ValView || claim.body.view != w) return;
        if (claim.chain.size() != 2 || claim.chain[0].signer != leader_of(ctx, w) ||
            claim.chain[1].signer != voter)
            return;
        const Value& v = claim.body.value;
        if (v.is_bottom || !ctx.externally_valid(v)) return;
        auto& entry = votes_[{w, v}];
        if (!entry.signers.insert(voter).second) return;
        entry.payloads.push_back(sp);
        if (static_cast<int>(entry.signers.size()) != ctx.th.q_cert) return;
        Msg bundle;
        bundle.tag = Tag::Bundle;
        for (const auto& p : entry.payloads) bundle.parts.push_back(p);
        SignedPayload fwd = unsigned_container(std::move(bundle));
        for (PartyId p = 0; p < ctx.n; ++p)
            if (p != ctx.self) out.send(p, fwd);
        out.commit(v);
        out.terminate = true;
        committed_ = true;
    }

    // --- timeouts and view changes --------------------------------------

    void send_timeout(Ctx& ctx, long long w, Actions& out) {
        timed_out_.insert(w);
        stopped_voting_.insert(w);
        Msg m;
        m.tag = Tag::Timeout;
        m.view = w;
        auto it = voted_.find(w);
        if (it != voted_.end()) {
            m.parts.push_back(it->second);  // our countersigned leader claim
        } else {
            m.parts.push_back(sign_claim(ctx, Value::bottom(), w));
        }
        out.multicast(ctx.n, ctx.sign(std::move(m)));
    }

    void handle_timeout(Ctx& ctx, const SignedPayload& sp, Actions& out) {
        long long u = sp.body.view;
        if (sp.chain.size() != 1 || sp.body.parts.size() != 1) return;
        PartyId reporter = sp.chain[0].signer;
        const SignedPayload& claim = sp.body.parts[0];
        if (claim.body.tag != Tag::ValView || claim.body.view != u) return;
        if (claim.body.value.is_bottom) {
            if (claim.chain.size() != 1 || claim.chain[0].signer != reporter) return;
        } else {
            if (claim.chain.size() != 2 || claim.chain[0].signer != leader_of(ctx, u) ||
                claim.chain[1].signer != reporter)
                return;
            if (!ctx.externally_valid(claim.body.value)) return;
        }
        auto& pool = timeout_pool_[u];
        if (!pool.signers.insert(reporter).second) return;
        pool.payloads.push_back(sp);
        maybe_change_view(ctx, u, out);
    }

    void maybe_change_view(Ctx& ctx, long long u, Actions& out) {
        if (u < view_ || view_change_done_.count(u)) return;
        auto& pool = timeout_pool_[u];
        std::set<Value> distinct;
        int non_leader = 0;
        PartyId lead = leader_of(ctx, u);
        for (const auto& t : pool.payloads) {
            const auto& claim = t.body.parts[0];
            if (!claim.body.value.is_bottom) distinct.insert(claim.body.value);
            if (t.chain[0].signer != lead) ++non_leader;
        }
        bool unanimous_enough =
            static_cast<int>(pool.signers.size()) >= ctx.th.q_cert && distinct.size() <= 1;
        bool leaderless_enough = non_leader >= ctx.th.q_cert;
        if (!unanimous_enough && !leaderless_enough) return;
        view_change_done_.insert(u);

        // Forward the evidence so laggards change view too.
        Msg bundle;
        bundle.tag = Tag::Bundle;
        for (const auto& t : pool.payloads) bundle.parts.push_back(t);
        SignedPayload fwd = unsigned_container(std::move(bundle));
        for (PartyId p = 0; p < ctx.n; ++p)
            if (p != ctx.self) out.send(p, fwd);

        harvest_certificate(ctx, u);
        if (view_ == u && !timed_out_.count(u)) send_timeout(ctx, u, out);
        enter_view(ctx, u + 1, out);
    }

    // Tries to assemble a view-u certificate locking some value out of the
    // timeout claims, preferring entries that back the candidate so the
    // certificate stays at its mandated exact size.
    void harvest_certificate(Ctx& ctx, long long u) {
        if (u <= best_cert_view_ && have_locked_cert_) return;
        auto& pool = timeout_pool_[u];
        std::set<Value> candidates;
        for (const auto& t : pool.payloads) {
            const auto& claim = t.body.parts[0];
            if (!claim.body.value.is_bottom) candidates.insert(claim.body.value);
        }
        const auto valid = validator(ctx);
        for (const auto& v : candidates) {
            std::vector<SignedPayload> picked;
            for (const auto& t : pool.payloads)
                if (t.body.parts[0].body.value == v) picked.push_back(t.body.parts[0]);
            for (const auto& t : pool.payloads)
                if (t.body.parts[0].body.value.is_bottom) picked.push_back(t.body.parts[0]);
            for (const auto& t : pool.payloads) {
                const auto& c = t.body.parts[0];
                if (!c.body.value.is_bottom && c.body.value != v) picked.push_back(c);
            }
            if (static_cast<int>(picked.size()) > ctx.th.q_cert)
                picked.resize(static_cast<std::size_t>(ctx.th.q_cert));
            CertStatus st = check_certificate(picked, u, leader_of(ctx, u), ctx.th, valid);
            if (st.kind == CertStatus::Kind::ValidLocks && (!have_locked_cert_ || u > best_cert_view_)) {
                Msg m;
                m.tag = Tag::Cert;
                m.view = u;
                m.parts = std::move(picked);
                best_cert_ = unsigned_container(std::move(m));
                best_cert_view_ = u;
                best_cert_locked_ = st.locked;
                have_locked_cert_ = true;
                return;
            }
        }
    }

    void enter_view(Ctx& ctx, long long w, Actions& out) {
        if (w <= view_) return;
        view_ = w;
        out.timer("to:" + std::to_string(w), ctx.local_time + ctx.Delta * 4);
        Msg m;
        m.tag = Tag::Status;
        m.view = w - 1;
        m.parts.push_back(have_locked_cert_ ? best_cert_ : empty_cert());
        out.send(leader_of(ctx, w), ctx.sign(std::move(m)));
        if (ctx.self == leader_of(ctx, w)) maybe_propose(ctx, w, out);
        auto buf = buffered_proposals_.find(w);
        if (buf != buffered_proposals_.end()) {
            SignedPayload sp = buf->second;
            buffered_proposals_.erase(buf);
            try_vote(ctx, sp, out);
        }
    }

    // --- statuses and later-view proposals -------------------------------

    // A status for view u reports the sender's best certificate, of view <= u.
    std::optional<CertEval> eval_status(Ctx& ctx, const SignedPayload& st, long long u) {
        if (st.body.tag != Tag::Status || st.body.view != u) return std::nullopt;
        if (st.chain.size() != 1 || st.body.parts.size() != 1) return std::nullopt;
        const SignedPayload& c = st.body.parts[0];
        long long cert_view = c.body.tag == Tag::Empty ? 0 : c.body.view;
        if (cert_view < 0 || cert_view > u) return std::nullopt;
        CertEval ev = eval_cert_container(c, leader_of(ctx, cert_view), ctx.th, validator(ctx));
        if (!ev.valid) return std::nullopt;
        if (!ev.locks_any && ev.locked.is_bottom) return std::nullopt;  // must lock something
        return ev;
    }

    void handle_status(Ctx& ctx, const SignedPayload& sp, Actions& out) {
        long long u = sp.body.view;
        auto ev = eval_status(ctx, sp, u);
        if (!ev) return;
        auto& got = statuses_[u];
        if (!got.signers.insert(sp.chain[0].signer).second) return;
        got.payloads.push_back(sp);
        got.evals.push_back(*ev);
        if (view_ == u + 1 && ctx.self == leader_of(ctx, u + 1)) maybe_propose(ctx, u + 1, out);
    }

    void maybe_propose(Ctx& ctx, long long w, Actions& out) {
        if (!act_as_leader_ || proposed_.count(w) || stopped_voting_.count(w) ||
            timed_out_.count(w))
            return;
        auto it = statuses_.find(w - 1);
        if (it == statuses_.end() || static_cast<int>(it->second.signers.size()) < ctx.th.q_cert)
            return;
        // Strongest justification first: a certificate of the view just ended.
        if (have_locked_cert_ && best_cert_view_ == w - 1) {
            propose(ctx, w, sign_claim(ctx, best_cert_locked_, w), best_cert_, out);
            return;
        }
        const auto& got = it->second;
        for (std::size_t i = 0; i < got.payloads.size(); ++i) {
            if (got.evals[i].view == w - 1 && !got.evals[i].locks_any) {
                propose(ctx, w, sign_claim(ctx, got.evals[i].locked, w),
                        got.payloads[i].body.parts[0], out);
                return;
            }
        }
        // No certificate from the previous view anywhere; fall back to the
        // status set itself and the strongest lock it reports.
        Msg set;
        set.tag = Tag::StatusSet;
        long long high = 0;
        for (int i = 0; i < ctx.th.q_cert; ++i) {
            set.parts.push_back(got.payloads[static_cast<std::size_t>(i)]);
            high = std::max(high, got.evals[static_cast<std::size_t>(i)].view);
        }
        Value v;
        if (high == 0) {
            v = input_;  // every report was primordial; leader's own input goes
        } else {
            bool found = false;
            for (int i = 0; i < ctx.th.q_cert; ++i) {
                const auto& ev = got.evals[static_cast<std::size_t>(i)];
                if (ev.view == high && !ev.locks_any && (!found || ev.locked < v)) {
                    v = ev.locked;
                    found = true;
                }
            }
            if (!found) return;  // highest reports lock nothing concrete; cannot justify
        }
        if (v.is_bottom || !ctx.externally_valid(v)) return;
        propose(ctx, w, sign_claim(ctx, v, w), unsigned_container(std::move(set)), out);
    }

    void propose(Ctx& ctx, long long w, SignedPayload inner, SignedPayload justification,
                 Actions& out) {
        proposed_.insert(w);
        Msg m;
        m.tag = Tag::Propose;
        m.view = w;
        m.parts.push_back(std::move(inner));
        m.parts.push_back(std::move(justification));
        out.multicast(ctx.n, ctx.sign(std::move(m)));
    }

    struct SignerPool {
        std::set<PartyId> signers;
        std::vector<SignedPayload> payloads;
    };
    struct StatusPool {
        std::set<PartyId> signers;
        std::vector<SignedPayload> payloads;
        std::vector<CertEval> evals;
    };
    struct VotePool {
        std::set<PartyId> signers;
        std::vector<SignedPayload> payloads;
    };

    Value input_;
    bool act_as_leader_ = true;
    long long view_ = 1;
    bool committed_ = false;
    std::map<long long, SignedPayload> voted_;  // view -> our countersigned claim
    std::set<long long> stopped_voting_;
    std::set<long long> timed_out_;
    std::set<long long> proposed_;
    std::map<long long, std::set<Value>> leader_values_;
    std::map<std::pair<long long, Value>, VotePool> votes_;
    std::map<long long, SignerPool> timeout_pool_;
    std::set<long long> view_change_done_;
    std::map<long long, StatusPool> statuses_;
    std::map<long long, SignedPayload> buffered_proposals_;
    SignedPayload best_cert_;
    long long best_cert_view_ = 0;
    Value best_cert_locked_;
    bool have_locked_cert_ = false;
};

}  // namespace bbl
