#pragma once

// Deterministic discrete-event simulator. One global event queue drives
// per-party state machines; parties see only their local clock (global time
// minus their start offset). An adversary-controlled delay policy assigns
// every message delay, and the simulator validates each assignment against
// the timing model, so a scenario can never cheat its own model.
//
// Determinism: queue ties break by (time, kind priority, actor, sequence).
// Deliveries at a given instant are processed before timer firings at the
// same instant, so a deadline check sees every message that arrived "by" its
// deadline, boundary included.

#include "bbl/core.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace bbl {

// ---------------------------------------------------------------------------
// Timing models

struct TimingModel {
    enum class Kind { Synchrony, PartialSynchrony, Asynchrony };
    Kind kind = Kind::Asynchrony;
    Rat delta{0};  // actual delay bound, hidden from protocols
    Rat Delta{0};  // conservative bound known to protocols
    Rat sigma{0};  // max clock skew between honest parties
    Rat gst{0};    // stabilization time for partial synchrony

    static TimingModel synchrony(Rat delta, Rat Delta, Rat sigma) {
        if (!(Rat(0) < delta && delta <= Delta))
            throw ConfigError("synchrony requires 0 < delta <= Delta");
        if (!(Rat(0) <= sigma && sigma <= delta))
            throw ConfigError("synchrony requires 0 <= sigma <= delta");
        TimingModel m;
        m.kind = Kind::Synchrony;
        m.delta = delta;
        m.Delta = Delta;
        m.sigma = sigma;
        return m;
    }
    static TimingModel partial_synchrony(Rat Delta, Rat gst) {
        if (Delta <= Rat(0) || gst < Rat(0))
            throw ConfigError("partial synchrony requires Delta > 0 and gst >= 0");
        TimingModel m;
        m.kind = Kind::PartialSynchrony;
        m.Delta = Delta;
        m.gst = gst;
        return m;
    }
    static TimingModel asynchrony() { return TimingModel{}; }
};

// ---------------------------------------------------------------------------
// Traces

enum class EventKind { Start, Send, Deliver, TimerFire, Commit, Terminate };

inline const char* kind_name(EventKind k) {
    switch (k) {
        case EventKind::Start: return "start";
        case EventKind::Send: return "send";
        case EventKind::Deliver: return "deliver";
        case EventKind::TimerFire: return "timer";
        case EventKind::Commit: return "commit";
        case EventKind::Terminate: return "terminate";
    }
    return "?";
}

struct Event {
    int step = 0;   // index within the trace
    int group = 0;  // atomic step id: a delivery and everything it triggers share one group
    Rat g_time{0};
    PartyId party = 0;
    Rat l_time{0};
    EventKind kind = EventKind::Start;
    PartyId peer = -1;      // Send: destination; Deliver: sender
    SignedPayload payload;  // Send and Deliver only
    std::string tag;        // TimerFire only
    Value value;            // Commit only
    int link = -1;          // Deliver: step index of the matching Send
};

struct Trace {
    int n = 0;
    std::vector<Rat> start_offsets;
    std::vector<bool> is_byzantine;
    std::vector<Event> events;

    std::vector<const Event*> of_party(PartyId p) const {
        std::vector<const Event*> out;
        for (const auto& e : events)
            if (e.party == p) out.push_back(&e);
        return out;
    }

    std::optional<Value> commit_of(PartyId p) const {
        for (const auto& e : events)
            if (e.party == p && e.kind == EventKind::Commit) return e.value;
        return std::nullopt;
    }

    std::optional<Rat> commit_time_of(PartyId p) const {
        for (const auto& e : events)
            if (e.party == p && e.kind == EventKind::Commit) return e.g_time;
        return std::nullopt;
    }

    std::string to_jsonl() const;
};

// ---------------------------------------------------------------------------
// Party interface

// What a state machine may do in one atomic step. Deadlines are local times;
// a deadline already in the past fires at the current instant, after any
// deliveries pending at that instant.
struct Actions {
    struct SendTo {
        PartyId to;
        SignedPayload payload;
    };
    struct TimerReq {
        std::string tag;
        Rat local_deadline;
    };
    std::vector<SendTo> sends;
    std::vector<TimerReq> timers;
    std::vector<Value> commits;
    bool terminate = false;

    void send(PartyId to, SignedPayload p) { sends.push_back({to, std::move(p)}); }
    void multicast(int n, const SignedPayload& p) {
        for (PartyId i = 0; i < n; ++i) sends.push_back({i, p});
    }
    void timer(std::string tag, Rat local_deadline) {
        timers.push_back({std::move(tag), local_deadline});
    }
    void commit(Value v) { commits.push_back(std::move(v)); }
};

class SignatureRegistry {
  public:
    void record(const Signature& s) { known_.insert({s.signer, s.digest}); }
    bool knows(const Signature& s) const { return known_.count({s.signer, s.digest}) > 0; }

  private:
    std::set<std::pair<PartyId, std::uint64_t>> known_;
};

// Per-step context handed to a state machine. sign and countersign register
// the created link with the run's registry; emitting any unregistered link is
// a forgery fault at send time, for honest and Byzantine parties alike.
class Ctx {
  public:
    PartyId self = 0;
    int n = 0;
    ThresholdSet th{0, 0, 0, 0, 0};
    PartyId broadcaster = 0;
    Rat Delta{0};  // known delay bound; zero under asynchrony
    Rat local_time{0};

    Ctx(SignatureRegistry* reg, const std::function<bool(const Value&)>* valid)
        : reg_(reg), valid_(valid) {}

    SignedPayload sign(Msg body) const {
        SignedPayload sp = make_signed(self, std::move(body));
        reg_->record(sp.chain.back());
        return sp;
    }
    SignedPayload countersign(SignedPayload sp) const {
        sp = bbl::countersign(self, std::move(sp));
        reg_->record(sp.chain.back());
        return sp;
    }
    bool externally_valid(const Value& v) const { return (*valid_)(v); }

  private:
    SignatureRegistry* reg_;
    const std::function<bool(const Value&)>* valid_;
};

struct IParty {
    virtual ~IParty() = default;
    virtual void on_start(Ctx& ctx, Actions& out) = 0;
    virtual void on_deliver(Ctx& ctx, PartyId from, const SignedPayload& sp, Actions& out) = 0;
    virtual void on_timer(Ctx& ctx, const std::string& tag, Actions& out) { (void)ctx, (void)tag, (void)out; }
};

using PartyFactory = std::function<std::unique_ptr<IParty>()>;

// ---------------------------------------------------------------------------
// Roles and Byzantine scripts
//
// A Byzantine party is scripted, not free-form: it runs one or more
// "personalities" (honest machines with their own inputs), each restricted to
// an audience, plus optional raw timed sends. Splitting a machine this way
// expresses every equivocation and double-vote shape the scenarios need while
// keeping scripts auditable.

struct HonestRole {
    PartyFactory make;
};

struct ByzPersonality {
    PartyFactory make;
    // Sends from this personality reach only these parties; absent means all.
    std::optional<std::set<PartyId>> audience;
    // Which external deliveries this personality processes; absent means all.
    // Self-addressed traffic is routed back to the personality that sent it.
    std::function<bool(PartyId from, const SignedPayload&)> accept;
};

struct ByzRawSend {
    Rat local_time;
    std::vector<PartyId> to;
    std::function<SignedPayload(Ctx&)> build;
};

struct ByzScript {
    std::vector<ByzPersonality> personalities;
    std::vector<ByzRawSend> raw_sends;
    // Recipients this party never transmits to, regardless of personality.
    std::set<PartyId> mute_to;
    // If set, emit one fabricated signature naming this party at start; the
    // simulator must reject it (unforgeability is enforced, not assumed).
    std::optional<PartyId> forge_as;
};

using Role = std::variant<HonestRole, ByzScript>;

// ---------------------------------------------------------------------------
// Worlds

struct SendMeta {
    PartyId from = 0;
    PartyId to = 0;
    Rat g_send{0};
    const SignedPayload* payload = nullptr;
    long long seq = 0;  // per-sender send counter
};

// Returns the delay, or nullopt to drop. Dropping is legal only when sender
// or receiver is Byzantine.
using DelayPolicy = std::function<std::optional<Rat>(const SendMeta&)>;

struct World {
    Resilience res;
    TimingModel model;
    PartyId broadcaster = 0;
    std::vector<Role> roles;
    std::vector<Rat> start_offsets;  // empty means all zero
    DelayPolicy delay_policy;        // null means base_delay everywhere
    Rat base_delay{1};
    std::function<bool(const Value&)> externally_valid;  // null means any non-Bottom

    bool byzantine(PartyId p) const { return std::holds_alternative<ByzScript>(roles[p]); }
};

// ---------------------------------------------------------------------------
// The run loop

namespace detail {

struct QStart {
    PartyId p;
};
struct QDeliver {
    PartyId from;
    PartyId to;
    SignedPayload payload;
    int send_step;
    int personality;  // origin personality for self-addressed traffic, else -1
};
struct QTimer {
    PartyId p;
    int personality;  // -1 for honest parties
    std::string tag;
};

// Kind priorities: starts before deliveries before timers at equal time.
struct QItem {
    Rat t;
    int prio;
    int actor;
    long long seq;
    std::variant<QStart, QDeliver, QTimer> body;
};
struct QLater {
    bool operator()(const QItem& a, const QItem& b) const {
        if (a.t != b.t) return a.t > b.t;
        if (a.prio != b.prio) return a.prio > b.prio;
        if (a.actor != b.actor) return a.actor > b.actor;
        return a.seq > b.seq;
    }
};

inline void collect_signatures(const SignedPayload& sp, std::vector<Signature>& out) {
    for (const auto& s : sp.chain) out.push_back(s);
    for (const auto& p : sp.body.parts) collect_signatures(p, out);
}

class Engine {
  public:
    Engine(const World& w, Rat horizon) : w_(w), horizon_(horizon) {
        n_ = w.res.n;
        th_ = thresholds(w.res);  // enforces the admissible region up front
        if (static_cast<int>(w.roles.size()) != n_)
            throw ConfigError("world needs exactly n roles");
        offsets_ = w.start_offsets.empty() ? std::vector<Rat>(n_, Rat(0)) : w.start_offsets;
        if (static_cast<int>(offsets_.size()) != n_)
            throw ConfigError("world needs exactly n start offsets");
        int byz = 0;
        for (PartyId p = 0; p < n_; ++p) {
            if (w.byzantine(p)) ++byz;
            if (offsets_[p] < Rat(0)) throw ConfigError("start offsets must be nonnegative");
            if (w.model.kind == TimingModel::Kind::Synchrony && offsets_[p] > w.model.sigma)
                throw ConfigError("start offset exceeds the skew bound sigma");
        }
        if (byz > w.res.f)
            throw ConfigError("world has " + std::to_string(byz) + " Byzantine parties, budget is f=" +
                              std::to_string(w.res.f));
        valid_ = w.externally_valid ? w.externally_valid
                                    : [](const Value& v) { return !v.is_bottom; };

        trace_.n = n_;
        trace_.start_offsets = offsets_;
        trace_.is_byzantine.resize(n_);
        honest_.resize(n_);
        byz_.resize(n_);
        terminated_.assign(n_, false);
        committed_.assign(n_, false);
        send_seq_.assign(n_, 0);
        for (PartyId p = 0; p < n_; ++p) {
            trace_.is_byzantine[p] = w.byzantine(p);
            if (auto* h = std::get_if<HonestRole>(&w.roles[p])) {
                honest_[p] = h->make();
            } else {
                const auto& script = std::get<ByzScript>(w.roles[p]);
                for (const auto& pers : script.personalities)
                    byz_[p].minds.push_back(pers.make());
                byz_[p].done.assign(byz_[p].minds.size(), false);
            }
            push(offsets_[p], 0, p, 0, QStart{p});
        }
    }

    Trace run() {
        while (!q_.empty() && !(horizon_ < q_.top().t)) {
            QItem item = q_.top();
            q_.pop();
            now_ = item.t;
            ++group_;
            std::visit([&](auto& b) { dispatch(item, b); }, item.body);
        }
        // Fairness at the horizon: under asynchrony and partial synchrony,
        // every message between honest parties must have been delivered.
        if (w_.model.kind != TimingModel::Kind::Synchrony) {
            while (!q_.empty()) {
                QItem item = q_.top();
                q_.pop();
                if (auto* d = std::get_if<QDeliver>(&item.body)) {
                    if (!w_.byzantine(d->from) && !w_.byzantine(d->to))
                        throw SimError("unfair schedule: message from party " +
                                       std::to_string(d->from) + " to party " +
                                       std::to_string(d->to) + " still undelivered at the horizon");
                }
            }
        }
        return std::move(trace_);
    }

  private:
    struct ByzMachine {
        std::vector<std::unique_ptr<IParty>> minds;
        std::vector<bool> done;
    };

    void push(Rat t, int prio, int actor, long long seq, std::variant<QStart, QDeliver, QTimer> body) {
        q_.push(QItem{std::move(t), prio, actor, seq, std::move(body)});
    }

    Ctx ctx_for(PartyId p) {
        Ctx c(&registry_, &valid_);
        c.self = p;
        c.n = n_;
        c.th = th_;
        c.broadcaster = w_.broadcaster;
        c.Delta = w_.model.Delta;
        c.local_time = now_ - offsets_[p];
        return c;
    }

    Event& append(EventKind kind, PartyId p) {
        Event e;
        e.step = static_cast<int>(trace_.events.size());
        e.group = group_;
        e.g_time = now_;
        e.party = p;
        e.l_time = now_ - offsets_[p];
        e.kind = kind;
        trace_.events.push_back(std::move(e));
        return trace_.events.back();
    }

    void dispatch(const QItem&, QStart& s) {
        append(EventKind::Start, s.p);
        if (honest_[s.p]) {
            Actions out;
            Ctx c = ctx_for(s.p);
            honest_[s.p]->on_start(c, out);
            apply(s.p, -1, out);
            return;
        }
        const auto& script = std::get<ByzScript>(w_.roles[s.p]);
        for (std::size_t i = 0; i < byz_[s.p].minds.size(); ++i) {
            Actions out;
            Ctx c = ctx_for(s.p);
            byz_[s.p].minds[i]->on_start(c, out);
            apply(s.p, static_cast<int>(i), out);
        }
        for (std::size_t k = 0; k < script.raw_sends.size(); ++k) {
            Rat at = std::max(now_, script.raw_sends[k].local_time + offsets_[s.p]);
            push(at, 2, s.p, ++timer_seq_, QTimer{s.p, -1, "!raw" + std::to_string(k)});
        }
        if (script.forge_as) {
            // A link never produced by any sign call; the send check must trip.
            Msg m;
            m.tag = Tag::Propose;
            m.value = Value::of("forged");
            SignedPayload sp{std::move(m), {Signature{*script.forge_as, 0xfabfab}}};
            emit_send(s.p, (s.p + 1) % n_, std::move(sp));
        }
    }

    void dispatch(const QItem& item, QDeliver& d) {
        Event& e = append(EventKind::Deliver, d.to);
        e.peer = d.from;
        e.payload = d.payload;
        e.link = d.send_step;
        (void)item;
        if (honest_[d.to]) {
            if (terminated_[d.to]) return;  // recorded, not processed
            Actions out;
            Ctx c = ctx_for(d.to);
            honest_[d.to]->on_deliver(c, d.from, d.payload, out);
            apply(d.to, -1, out);
            return;
        }
        auto& machine = byz_[d.to];
        const auto& script = std::get<ByzScript>(w_.roles[d.to]);
        for (std::size_t i = 0; i < machine.minds.size(); ++i) {
            if (machine.done[i]) continue;
            if (d.personality >= 0 && static_cast<int>(i) != d.personality) continue;
            if (d.personality < 0 && script.personalities[i].accept &&
                !script.personalities[i].accept(d.from, d.payload))
                continue;
            Actions out;
            Ctx c = ctx_for(d.to);
            machine.minds[i]->on_deliver(c, d.from, d.payload, out);
            apply(d.to, static_cast<int>(i), out);
        }
    }

    void dispatch(const QItem&, QTimer& t) {
        if (honest_[t.p]) {
            if (terminated_[t.p]) return;
            Event& e = append(EventKind::TimerFire, t.p);
            e.tag = t.tag;
            Actions out;
            Ctx c = ctx_for(t.p);
            honest_[t.p]->on_timer(c, t.tag, out);
            apply(t.p, -1, out);
            return;
        }
        const auto& script = std::get<ByzScript>(w_.roles[t.p]);
        if (t.tag.rfind("!raw", 0) == 0) {
            std::size_t k = std::stoul(t.tag.substr(4));
            Ctx c = ctx_for(t.p);
            SignedPayload sp = script.raw_sends[k].build(c);
            for (PartyId to : script.raw_sends[k].to) emit_send(t.p, to, sp);
            return;
        }
        auto& machine = byz_[t.p];
        if (t.personality < 0 || machine.done[t.personality]) return;
        Event& e = append(EventKind::TimerFire, t.p);
        e.tag = "p" + std::to_string(t.personality) + ":" + t.tag;
        Actions out;
        Ctx c = ctx_for(t.p);
        machine.minds[t.personality]->on_timer(c, t.tag, out);
        apply(t.p, t.personality, out);
    }

    void apply(PartyId p, int personality, Actions& out) {
        const ByzScript* script =
            w_.byzantine(p) ? &std::get<ByzScript>(w_.roles[p]) : nullptr;
        for (auto& s : out.sends) {
            if (script) {
                if (script->mute_to.count(s.to)) continue;
                if (personality >= 0) {
                    const auto& aud = script->personalities[personality].audience;
                    if (aud && !aud->count(s.to)) continue;
                }
            }
            emit_send(p, s.to, std::move(s.payload), personality);
        }
        for (auto& t : out.timers) {
            Rat at = std::max(now_, t.local_deadline + offsets_[p]);
            push(at, 2, p, ++timer_seq_, QTimer{p, personality, std::move(t.tag)});
        }
        for (auto& v : out.commits) {
            if (honest_[p] && committed_[p])
                throw SimError("party " + std::to_string(p) + " committed twice");
            committed_[p] = true;
            Event& e = append(EventKind::Commit, p);
            e.value = std::move(v);
        }
        if (out.terminate) {
            if (honest_[p]) {
                append(EventKind::Terminate, p);
                terminated_[p] = true;
            } else if (personality >= 0) {
                byz_[p].done[personality] = true;
            }
        }
    }

    void emit_send(PartyId from, PartyId to, SignedPayload payload, int personality = -1) {
        if (to < 0 || to >= n_) throw ConfigError("send to unknown party " + std::to_string(to));
        std::vector<Signature> sigs;
        collect_signatures(payload, sigs);
        for (const auto& s : sigs)
            if (!registry_.knows(s))
                throw SimError("forgery: party " + std::to_string(from) +
                               " emitted a signature naming party " + std::to_string(s.signer) +
                               " that was never produced by it");
        Event& e = append(EventKind::Send, from);
        e.peer = to;
        e.payload = payload;
        int send_step = e.step;

        SendMeta meta{from, to, now_, &payload, send_seq_[from]};
        std::optional<Rat> delay =
            w_.delay_policy ? w_.delay_policy(meta) : std::optional<Rat>(w_.base_delay);
        bool honest_pair = !w_.byzantine(from) && !w_.byzantine(to);
        auto describe = [&] {
            return "message from party " + std::to_string(from) + " to party " +
                   std::to_string(to) + " sent at " + format_rat(now_);
        };
        if (!delay) {
            if (honest_pair)
                throw SimError("model violation: dropped " + describe());
            return;  // dropped, Send stays on the record
        }
        if (*delay < Rat(0)) throw SimError("model violation: negative delay for " + describe());
        Rat arrival = now_ + *delay;
        if (honest_pair) {
            switch (w_.model.kind) {
                case TimingModel::Kind::Synchrony:
                    if (*delay > w_.model.delta)
                        throw SimError("model violation: delay " + format_rat(*delay) +
                                       " exceeds delta for " + describe());
                    break;
                case TimingModel::Kind::PartialSynchrony:
                    if (arrival > std::max(now_, w_.model.gst) + w_.model.Delta)
                        throw SimError("model violation: " + describe() +
                                       " arrives later than max(send, GST) + Delta");
                    break;
                case TimingModel::Kind::Asynchrony:
                    break;  // any finite delay; fairness checked at the horizon
            }
        }
        // A message can arrive before its receiver starts; it waits there.
        Rat deliver_at = std::max(arrival, offsets_[to]);
        int orig = (from == to) ? personality : -1;
        push(deliver_at, 1, from, ++send_seq_[from], QDeliver{from, to, std::move(payload), send_step, orig});
    }

    const World& w_;
    Rat horizon_;
    int n_ = 0;
    ThresholdSet th_{0, 0, 0, 0, 0};
    std::vector<Rat> offsets_;
    std::function<bool(const Value&)> valid_;
    Trace trace_;
    std::vector<std::unique_ptr<IParty>> honest_;
    std::vector<ByzMachine> byz_;
    std::vector<bool> terminated_;
    std::vector<bool> committed_;
    std::vector<long long> send_seq_;
    long long timer_seq_ = 0;
    int group_ = -1;
    Rat now_{0};
    SignatureRegistry registry_;
    std::priority_queue<QItem, std::vector<QItem>, QLater> q_;
};

}  // namespace detail

inline Trace run(const World& world, Rat horizon) {
    detail::Engine engine(world, horizon);
    return engine.run();
}

// ---------------------------------------------------------------------------
// Asynchronous round assignment
//
// An atomic step is one trace group: a start, or a delivery plus everything
// it triggered, or a timer firing. Round 0 holds the start steps. For r >= 1,
// round r spans the steps after the end of round r-1 through the last step
// that delivers a round-(r-1) message, where a message's round is the round
// of the step that sent it. Steps after the final such boundary join the last
// defined round, so a trace with no messages sits entirely in round 0.

struct RoundAssignment {
    std::vector<int> round_of_step;   // indexed by event step
    std::vector<int> round_of_group;  // indexed by atomic step group
    int max_round = 0;

    int of_event(const Event& e) const { return round_of_group[e.group]; }
};

inline RoundAssignment assign_async_rounds(const Trace& tr) {
    const auto& ev = tr.events;
    RoundAssignment ra;
    if (ev.empty()) return ra;
    int groups = 0;
    for (const auto& e : ev) groups = std::max(groups, e.group + 1);
    ra.round_of_group.assign(groups, -1);

    int l = -1;  // boundary group of the block assigned so far
    for (const auto& e : ev)
        if (e.kind == EventKind::Start) l = std::max(l, e.group);
    for (int g = 0; g <= l; ++g) ra.round_of_group[g] = 0;

    int r = 1;
    while (l < groups - 1) {
        int next_l = -1;
        for (const auto& e : ev)
            if (e.group > l && e.kind == EventKind::Deliver && e.link >= 0 &&
                ra.round_of_group[ev[e.link].group] == r - 1)
                next_l = std::max(next_l, e.group);
        if (next_l < 0) {
            for (int g = l + 1; g < groups; ++g) ra.round_of_group[g] = r - 1;
            break;
        }
        for (int g = l + 1; g <= next_l; ++g) ra.round_of_group[g] = r;
        ra.max_round = r;
        l = next_l;
        ++r;
    }
    ra.round_of_step.resize(ev.size());
    for (const auto& e : ev) ra.round_of_step[e.step] = ra.round_of_group[e.group];
    return ra;
}

// ---------------------------------------------------------------------------
// Local-history comparison
//
// Two executions are indistinguishable to a party up to a cutoff when the
// party's observable step sequences agree strictly before that local time:
// same kinds, same peers, same payloads, same timer tags, same commit values.

struct HistoryDiff {
    bool differs = false;
    int index = -1;  // position in the compared sequences, -1 for none
    std::string what;
};

inline HistoryDiff diff_local_history(const Trace& a, const Trace& b, PartyId party,
                                      const Rat& cutoff) {
    auto pick = [&](const Trace& t) {
        std::vector<const Event*> v;
        for (const auto& e : t.events)
            if (e.party == party && e.l_time < cutoff) v.push_back(&e);
        return v;
    };
    auto ea = pick(a);
    auto eb = pick(b);
    std::size_t common = std::min(ea.size(), eb.size());
    for (std::size_t i = 0; i < common; ++i) {
        const Event& x = *ea[i];
        const Event& y = *eb[i];
        std::string what;
        if (x.l_time != y.l_time)
            what = "local time " + format_rat(x.l_time) + " vs " + format_rat(y.l_time);
        else if (x.kind != y.kind)
            what = std::string("kind ") + kind_name(x.kind) + " vs " + kind_name(y.kind);
        else if (x.peer != y.peer)
            what = "peer " + std::to_string(x.peer) + " vs " + std::to_string(y.peer);
        else if (!(x.payload == y.payload))
            what = "payload";
        else if (x.tag != y.tag)
            what = "timer tag " + x.tag + " vs " + y.tag;
        else if (x.value != y.value)
            what = "commit value " + x.value.display() + " vs " + y.value.display();
        if (!what.empty()) return {true, static_cast<int>(i), what};
    }
    if (ea.size() != eb.size())
        return {true, static_cast<int>(common),
                "lengths " + std::to_string(ea.size()) + " vs " + std::to_string(eb.size())};
    return {};
}

inline bool compare_local_history(const Trace& a, const Trace& b, PartyId party,
                                  const Rat& cutoff) {
    return !diff_local_history(a, b, party, cutoff).differs;
}

// ---------------------------------------------------------------------------
// JSONL export

namespace detail {
inline void json_escape_into(std::string& out, const std::string& s) {
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}
}  // namespace detail

inline std::string Trace::to_jsonl() const {
    std::string out;
    for (const auto& e : events) {
        out += "{\"step\":" + std::to_string(e.step);
        out += ",\"g_time\":\"" + format_rat(e.g_time) + "\"";
        out += ",\"party\":" + std::to_string(e.party);
        out += ",\"l_time\":\"" + format_rat(e.l_time) + "\"";
        out += ",\"kind\":\"" + std::string(kind_name(e.kind)) + "\"";
        switch (e.kind) {
            case EventKind::Send:
                out += ",\"peer\":" + std::to_string(e.peer);
                out += ",\"digest\":\"" + detail::hex64(payload_digest(e.payload)) + "\"";
                break;
            case EventKind::Deliver:
                out += ",\"peer\":" + std::to_string(e.peer);
                out += ",\"digest\":\"" + detail::hex64(payload_digest(e.payload)) + "\"";
                out += ",\"link\":" + std::to_string(e.link);
                break;
            case EventKind::TimerFire: {
                std::string esc;
                detail::json_escape_into(esc, e.tag);
                out += ",\"tag\":\"" + esc + "\"";
                break;
            }
            case EventKind::Commit:
                if (e.value.is_bottom) {
                    out += ",\"value\":null";
                } else {
                    std::string esc;
                    detail::json_escape_into(esc, e.value.bytes);
                    out += ",\"value\":\"" + esc + "\"";
                }
                break;
            default:
                break;
        }
        out += "}\n";
    }
    return out;
}

}  // namespace bbl
