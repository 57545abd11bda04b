#pragma once

// Two-round reliable broadcast for n >= 3f+1 under full asynchrony.
//
// The broadcaster proposes; every party votes for the first proposal it sees
// from the broadcaster; a party holding n-f distinct-signer votes for one
// value forwards that quorum to everyone else, commits, and terminates.
// Quorum intersection (two n-f quorums overlap in at least f+1 parties, one
// of them honest) pins the committed value, and the forwarded quorum carries
// every other honest party over the line.

#include "bbl/simnet.hpp"

#include <map>

namespace bbl {

class Brb2Party : public IParty {
  public:
    explicit Brb2Party(Value input = Value::bottom()) : input_(std::move(input)) {}

    void on_start(Ctx& ctx, Actions& out) override {
        if (ctx.self != ctx.broadcaster) return;
        Msg m;
        m.tag = Tag::Propose;
        m.value = input_;
        out.multicast(ctx.n, ctx.sign(std::move(m)));
    }

    void on_deliver(Ctx& ctx, PartyId from, const SignedPayload& sp, Actions& out) override {
        if (committed_ || !verify_chain(sp)) return;
        if (sp.body.tag == Tag::Bundle && sp.chain.empty()) {
            // A forwarded quorum; ingest vote by vote.
            for (const auto& part : sp.body.parts) {
                ingest(ctx, from, part, out);
                if (committed_) return;
            }
            return;
        }
        ingest(ctx, from, sp, out);
    }

  private:
    void ingest(Ctx& ctx, PartyId from, const SignedPayload& sp, Actions& out) {
        if (sp.body.tag == Tag::Propose) {
            // Only the first proposal straight from the broadcaster draws a
            // vote; later or relayed proposals are ignored.
            if (voted_ || from != ctx.broadcaster) return;
            if (sp.chain.size() != 1 || sp.chain[0].signer != ctx.broadcaster) return;
            if (sp.body.value.is_bottom) return;
            voted_ = true;
            Msg m;
            m.tag = Tag::Vote;
            m.value = sp.body.value;
            out.multicast(ctx.n, ctx.sign(std::move(m)));
            return;
        }
        if (sp.body.tag == Tag::Vote) {
            if (sp.chain.size() != 1 || sp.body.value.is_bottom) return;
            auto& backers = tally_[sp.body.value];
            if (!backers.emplace(sp.chain[0].signer, sp).second) return;
            // Votes count toward any value, voted for or not.
            if (static_cast<int>(backers.size()) == ctx.th.q_nf) {
                Msg bundle;
                bundle.tag = Tag::Bundle;
                for (const auto& [signer, vote] : backers) bundle.parts.push_back(vote);
                SignedPayload fwd = unsigned_container(std::move(bundle));
                for (PartyId p = 0; p < ctx.n; ++p)
                    if (p != ctx.self) out.send(p, fwd);
                out.commit(sp.body.value);
                out.terminate = true;
                committed_ = true;
            }
            return;
        }
    }

    Value input_;
    bool voted_ = false;
    bool committed_ = false;
    std::map<Value, std::map<PartyId, SignedPayload>> tally_;
};

}  // namespace bbl
