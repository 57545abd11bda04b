#pragma once

// Shared protocol vocabulary: party identities, values with a distinguished
// "no value" marker, simulated signatures as attribution chains, equivocation
// extraction, and quorum threshold arithmetic.
//
// Signatures here are not cryptographic. A signature is a (signer, digest)
// attribution link, and the simulator separately enforces that every link was
// produced by a sign call of the named party. That gives ideal unforgeability
// without the noise of real key material.

#include "bbl/rational.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bbl {

using PartyId = int;

// Configuration mistakes (bad parameters, malformed config files). The CLI
// maps these to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Resilience outside the admissible region without an explicit override.
struct ResilienceError : ConfigError {
    using ConfigError::ConfigError;
};

// Runtime misbehavior detected by the simulator: forgery, an out-of-model
// delay, a double commit, or an unfair schedule.
struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Values

// An application value, or the distinguished Bottom marker. Bottom sorts
// below every real value so deterministic tie-breaks can treat it as minimal.
struct Value {
    bool is_bottom = true;
    std::string bytes;

    static Value bottom() { return Value{}; }
    static Value of(std::string b) { return Value{false, std::move(b)}; }

    friend bool operator==(const Value& a, const Value& b) {
        return a.is_bottom == b.is_bottom && (a.is_bottom || a.bytes == b.bytes);
    }
    friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }
    friend bool operator<(const Value& a, const Value& b) {
        if (a.is_bottom != b.is_bottom) return a.is_bottom;
        if (a.is_bottom) return false;
        return a.bytes < b.bytes;
    }

    std::string display() const { return is_bottom ? "(bottom)" : bytes; }
};

// ---------------------------------------------------------------------------
// Messages and signatures

enum class Tag : int {
    Propose = 0,   // broadcaster or leader proposal
    Vote,          // vote, optionally carrying a receipt or grid time in rtime
    Timeout,       // view timeout carrying a (value, view) claim or Bottom
    Status,        // new-view status report to the incoming leader
    ValView,       // a bare (value, view) body, the unit of countersigning
    Cert,          // certificate container, parts hold the entries
    StatusSet,     // bundle of status messages used as a proposal proof
    Empty,         // the distinguished empty certificate of view 0
    Bundle,        // unsigned container used to forward a quorum at once
    CommitMsg,     // "I committed v" notification
    BaVal,         // agreement subroutine value, view doubles as instance id
};

struct SignedPayload;

// A structured message body. Unused fields keep their defaults so digests
// stay deterministic. parts holds nested signed payloads: certificate
// entries, forwarded quorums, countersigned bodies.
struct Msg {
    Tag tag = Tag::Empty;
    Value value;
    long long view = 0;
    Rat rtime{0};
    std::vector<SignedPayload> parts;
};

struct Signature {
    PartyId signer = -1;
    std::uint64_t digest = 0;

    friend bool operator==(const Signature& a, const Signature& b) {
        return a.signer == b.signer && a.digest == b.digest;
    }
};

// A body plus an ordered chain of attribution links. chain[0] is the
// originator; each later link countersigns everything before it. An empty
// chain is a plain unsigned container (quorum bundles travel that way).
struct SignedPayload {
    Msg body;
    std::vector<Signature> chain;
};

inline bool operator==(const SignedPayload& a, const SignedPayload& b);
inline bool operator==(const Msg& a, const Msg& b) {
    return a.tag == b.tag && a.value == b.value && a.view == b.view &&
           a.rtime == b.rtime && a.parts == b.parts;
}
inline bool operator==(const SignedPayload& a, const SignedPayload& b) {
    return a.chain == b.chain && a.body == b.body;
}

// ---------------------------------------------------------------------------
// Digests
//
// FNV-1a over a canonical serialization. Collisions are a non-concern at
// simulation scale; equality checks that matter compare structurally.

class Fnv {
  public:
    void feed_byte(unsigned char b) { h_ = (h_ ^ b) * 1099511628211ull; }
    void feed_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) feed_byte(static_cast<unsigned char>(v >> (8 * i)));
    }
    void feed_i64(long long v) { feed_u64(static_cast<std::uint64_t>(v)); }
    void feed_str(const std::string& s) {
        feed_u64(s.size());
        for (unsigned char c : s) feed_byte(c);
    }
    std::uint64_t value() const { return h_; }

  private:
    std::uint64_t h_ = 1469598103934665603ull;
};

inline std::uint64_t payload_digest(const SignedPayload& sp);

inline void feed_msg(Fnv& f, const Msg& m) {
    f.feed_i64(static_cast<long long>(m.tag));
    f.feed_byte(m.value.is_bottom ? 1 : 0);
    f.feed_str(m.value.bytes);
    f.feed_i64(m.view);
    f.feed_i64(m.rtime.numerator());
    f.feed_i64(m.rtime.denominator());
    f.feed_u64(m.parts.size());
    for (const auto& p : m.parts) f.feed_u64(payload_digest(p));
}

// What the signer at position `prefix` actually signs: the body, every
// earlier link, and its own identity. Countersigning therefore covers the
// inner signatures, and rewriting a link's signer invalidates its digest,
// the way a real signature fails against the wrong public key.
inline std::uint64_t link_digest(const Msg& body, const std::vector<Signature>& chain,
                                 std::size_t prefix, PartyId signer) {
    Fnv f;
    feed_msg(f, body);
    for (std::size_t i = 0; i < prefix; ++i) {
        f.feed_i64(chain[i].signer);
        f.feed_u64(chain[i].digest);
    }
    f.feed_i64(signer);
    return f.value();
}

// Content identity of a payload including its full chain.
inline std::uint64_t payload_digest(const SignedPayload& sp) {
    Fnv f;
    feed_msg(f, sp.body);
    for (const auto& s : sp.chain) {
        f.feed_i64(s.signer);
        f.feed_u64(s.digest);
    }
    return f.value();
}

// ---------------------------------------------------------------------------
// Signing

inline SignedPayload make_signed(PartyId signer, Msg body) {
    SignedPayload sp{std::move(body), {}};
    sp.chain.push_back(Signature{signer, link_digest(sp.body, sp.chain, 0, signer)});
    return sp;
}

inline SignedPayload countersign(PartyId signer, SignedPayload sp) {
    sp.chain.push_back(
        Signature{signer, link_digest(sp.body, sp.chain, sp.chain.size(), signer)});
    return sp;
}

inline SignedPayload unsigned_container(Msg body) { return SignedPayload{std::move(body), {}}; }

// Structural validity: every link's digest matches what that signer would
// have signed, recursively through nested parts. Messages failing this are
// discarded by protocols without any state change.
inline bool verify_chain(const SignedPayload& sp) {
    for (std::size_t i = 0; i < sp.chain.size(); ++i)
        if (sp.chain[i].digest != link_digest(sp.body, sp.chain, i, sp.chain[i].signer))
            return false;
    for (const auto& p : sp.body.parts)
        if (!verify_chain(p)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Equivocation extraction

namespace detail {
inline void collect_attributed(const SignedPayload& sp, PartyId who, std::set<Value>& out) {
    if (!sp.chain.empty() && sp.chain[0].signer == who && !sp.body.value.is_bottom)
        out.insert(sp.body.value);
    for (const auto& p : sp.body.parts) collect_attributed(p, who, out);
}
}  // namespace detail

// Every distinct value attributed to `broadcaster` anywhere in the received
// payloads, at any nesting depth: a forwarded vote that wraps a conflicting
// proposal counts. Two or more results mean the broadcaster equivocated.
inline std::set<Value> extract_broadcaster_values(const std::vector<SignedPayload>& received,
                                                  PartyId broadcaster) {
    std::set<Value> out;
    for (const auto& sp : received) detail::collect_attributed(sp, broadcaster, out);
    return out;
}

// ---------------------------------------------------------------------------
// Resilience settings and quorum thresholds

enum class Setting {
    AsyncBrb,      // reliable broadcast under asynchrony, n >= 3f+1
    PsyncFast,     // fast-path validated broadcast, n >= 5f-1
    SyncThird,     // synchronous broadcast, f < n/3
    SyncEqThird,   // synchronous broadcast, f = n/3 exactly
    SyncMinority,  // synchronous broadcast, n/3 < f < n/2
    SyncMajority,  // synchronous broadcast, n/2 <= f < n
};

inline const char* setting_name(Setting s) {
    switch (s) {
        case Setting::AsyncBrb: return "async-brb";
        case Setting::PsyncFast: return "psync-fast";
        case Setting::SyncThird: return "sync-third";
        case Setting::SyncEqThird: return "sync-eq-third";
        case Setting::SyncMinority: return "sync-minority";
        case Setting::SyncMajority: return "sync-majority";
    }
    return "?";
}

inline std::optional<Setting> parse_setting(const std::string& s) {
    for (Setting c : {Setting::AsyncBrb, Setting::PsyncFast, Setting::SyncThird,
                      Setting::SyncEqThird, Setting::SyncMinority, Setting::SyncMajority})
        if (s == setting_name(c)) return c;
    return std::nullopt;
}

struct Resilience {
    int n = 0;
    int f = 0;
    Setting setting = Setting::AsyncBrb;
    // Permits deliberately out-of-region worlds for negative tests; the basic
    // sanity bounds below still apply.
    bool allow_out_of_region = false;
};

struct ThresholdSet {
    int q_nf;       // n-f, the large quorum
    int q_f1;       // f+1, one more than the fault budget
    int q_cert;     // 4f-1, certificate and view-change quorum
    int q_lock_lo;  // 2f-1, lock rule needing leader exclusivity
    int q_lock_hi;  // 2f, lock rule over non-leader entries
};

// The violated inequality for an out-of-region pair, if any. Integer
// arithmetic throughout: f < n/3 is 3f < n, and so on.
inline std::optional<std::string> region_violation(const Resilience& r) {
    switch (r.setting) {
        case Setting::AsyncBrb:
            if (r.n < 3 * r.f + 1) return "n >= 3f+1";
            break;
        case Setting::PsyncFast:
            if (r.n < 5 * r.f - 1) return "n >= 5f-1";
            break;
        case Setting::SyncThird:
            if (3 * r.f >= r.n) return "f < n/3";
            break;
        case Setting::SyncEqThird:
            if (r.n != 3 * r.f) return "f = n/3";
            break;
        case Setting::SyncMinority:
            if (3 * r.f <= r.n || 2 * r.f >= r.n) return "n/3 < f < n/2";
            break;
        case Setting::SyncMajority:
            if (2 * r.f < r.n || r.f >= r.n) return "n/2 <= f < n";
            break;
    }
    return std::nullopt;
}

inline ThresholdSet thresholds(const Resilience& r) {
    if (r.n < 1 || r.f < 0 || r.f >= r.n)
        throw ResilienceError("resilience requires 0 <= f < n, got n=" + std::to_string(r.n) +
                              " f=" + std::to_string(r.f));
    if (auto v = region_violation(r); v && !r.allow_out_of_region)
        throw ResilienceError("resilience out of region for " +
                              std::string(setting_name(r.setting)) + ": requires " + *v +
                              ", got n=" + std::to_string(r.n) + " f=" + std::to_string(r.f));
    return ThresholdSet{r.n - r.f, r.f + 1, 4 * r.f - 1, 2 * r.f - 1, 2 * r.f};
}

}  // namespace bbl
