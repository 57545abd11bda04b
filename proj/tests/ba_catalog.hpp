#pragma once

// Scripted misbehavior catalog for the fallback agreement, shared by the unit
// tests and the acceptance gate. Each faulty party is driven through every
// per-instance outcome it can induce: a value of its choosing, silence, a
// two-faced split, and a stale injection that the lock-step round gate must
// reject. The catalog crosses those behaviors (for every faulty party) with
// every honest input vector over two values and checks agreement, validity,
// and punctual termination on each run.

#include "bbl/proto_sync.hpp"

#include <set>
#include <string>
#include <vector>

namespace bbl::ba_catalog {

enum class Behavior { Silent, InputA, InputB, Fresh, Split, LateInject };

inline const std::vector<Behavior>& behaviors() {
    static const std::vector<Behavior> all = {Behavior::Silent, Behavior::InputA,
                                              Behavior::InputB, Behavior::Fresh,
                                              Behavior::Split,  Behavior::LateInject};
    return all;
}

inline const char* behavior_name(Behavior b) {
    switch (b) {
        case Behavior::Silent: return "silent";
        case Behavior::InputA: return "input-a";
        case Behavior::InputB: return "input-b";
        case Behavior::Fresh: return "fresh-value";
        case Behavior::Split: return "split";
        case Behavior::LateInject: return "late-inject";
    }
    return "?";
}

inline Role make_role(Behavior b, PartyId self, int n, const Value& va, const Value& vb) {
    ByzScript s;
    auto personality = [](Value input, std::optional<std::set<PartyId>> aud) {
        Value v = std::move(input);
        return ByzPersonality{[v] { return std::make_unique<BaOnlyParty>(v); }, std::move(aud),
                              nullptr};
    };
    switch (b) {
        case Behavior::Silent:
            break;
        case Behavior::InputA:
            s.personalities.push_back(personality(va, std::nullopt));
            break;
        case Behavior::InputB:
            s.personalities.push_back(personality(vb, std::nullopt));
            break;
        case Behavior::Fresh:
            s.personalities.push_back(
                personality(Value::of("byz" + std::to_string(self)), std::nullopt));
            break;
        case Behavior::Split: {
            // Tell the first half one value and the second half another; honest
            // relays must collapse the instance to "no value" on both sides.
            std::set<PartyId> lo{self}, hi{self};
            for (PartyId p = 0; p < n; ++p) (p < n / 2 ? lo : hi).insert(p);
            s.personalities.push_back(personality(va, lo));
            s.personalities.push_back(personality(vb, hi));
            break;
        }
        case Behavior::LateInject: {
            // A bare single-signature value sent mid-run: receivers in lock-step
            // round r demand r signatures, so acceptance depends only on timing.
            std::vector<PartyId> everyone;
            for (PartyId p = 0; p < n; ++p) everyone.push_back(p);
            s.raw_sends.push_back(ByzRawSend{Rat(15), everyone, [va, self](Ctx& ctx) {
                                                 Msg m;
                                                 m.tag = Tag::BaVal;
                                                 m.view = self;
                                                 m.value = va;
                                                 return ctx.sign(std::move(m));
                                             }});
            break;
        }
    }
    return s;
}

struct CatalogStats {
    int runs = 0;
    int agreement_failures = 0;
    int validity_failures = 0;
    int schedule_failures = 0;  // missing, early, or late commits
};

// Runs the full catalog at (n, f): the last f parties are faulty, every
// combination of their behaviors crosses every honest input vector over
// {va, vb}. Delta = 10, actual delays 1.
inline CatalogStats run_catalog(int n, int f, Setting setting) {
    const Value va = Value::of("a");
    const Value vb = Value::of("b");
    const Rat delta(10);
    const Rat decide_at = delta * 2 * (f + 1);
    CatalogStats stats;

    int honest = n - f;
    long long input_combos = 1;
    for (int i = 0; i < honest; ++i) input_combos *= 2;
    long long behavior_combos = 1;
    for (int i = 0; i < f; ++i) behavior_combos *= static_cast<long long>(behaviors().size());

    for (long long bc = 0; bc < behavior_combos; ++bc) {
        for (long long ic = 0; ic < input_combos; ++ic) {
            World w;
            w.res = Resilience{n, f, setting, false};
            w.model = TimingModel::synchrony(Rat(1), delta, Rat(0));
            w.broadcaster = 0;
            w.base_delay = Rat(1);
            std::vector<Value> inputs;
            for (int p = 0; p < honest; ++p) {
                Value in = ((ic >> p) & 1) ? vb : va;
                inputs.push_back(in);
                w.roles.push_back(
                    HonestRole{[in] { return std::make_unique<BaOnlyParty>(in); }});
            }
            long long rem = bc;
            for (int i = 0; i < f; ++i) {
                Behavior b = behaviors()[static_cast<std::size_t>(
                    rem % static_cast<long long>(behaviors().size()))];
                rem /= static_cast<long long>(behaviors().size());
                w.roles.push_back(make_role(b, honest + i, n, va, vb));
            }

            Trace tr = run(w, decide_at + 10);
            ++stats.runs;

            std::optional<Value> agreed;
            bool agreement_ok = true;
            bool schedule_ok = true;
            for (PartyId p = 0; p < honest; ++p) {
                auto v = tr.commit_of(p);
                auto t = tr.commit_time_of(p);
                if (!v || !t || *t != decide_at) {
                    schedule_ok = false;
                    continue;
                }
                if (!agreed)
                    agreed = *v;
                else if (!(*agreed == *v))
                    agreement_ok = false;
            }
            if (!agreement_ok) ++stats.agreement_failures;
            if (!schedule_ok) ++stats.schedule_failures;

            bool unanimous = true;
            for (const auto& in : inputs)
                if (!(in == inputs[0])) unanimous = false;
            if (unanimous && (!agreed || !(*agreed == inputs[0]))) ++stats.validity_failures;
        }
    }
    return stats;
}

}  // namespace bbl::ba_catalog
