#include "tempocause/dataset.hpp"
#include "tempocause/formula.hpp"
#include "tempocause/generate.hpp"

#include <gtest/gtest.h>

#include <string>

using namespace tempocause;

namespace {

constexpr Label T = Label::True, F = Label::False, M = Label::Missing;

Dataset fig1() { return load_csv(std::string(TEMPOCAUSE_DATA_DIR) + "/fig1.csv"); }

LabelTrack random_track(gen::Rng& rng, std::size_t n) {
    LabelTrack out(n);
    for (auto& l : out) l = static_cast<Label>(rng.index(3));
    return out;
}

} // namespace

TEST(LabelTrack, RangeWithMissing) {
    const Dataset ds("d", {Variable::continuous("v", {1, 2, 3, kMissing})});
    EXPECT_EQ(label_track(ds, EventDef::range("e", "v", 2, 3)), (LabelTrack{F, T, T, M}));
}

TEST(LabelTrack, LevelSet) {
    const Dataset ds("d", {Variable::discrete("k", {"a", "b"}, {0, 1, 0})});
    EXPECT_EQ(label_track(ds, EventDef::levels("e", "k", {"a"})), (LabelTrack{T, F, T}));
}

TEST(LabelTrack, FigureOneCauseHoldsFourTimes) {
    const auto ds = fig1();
    EXPECT_EQ(count_true(label_track(ds, EventDef::levels("c", "c", {"1"}))), 4u);
}

TEST(LabelTrack, Errors) {
    const Dataset ds("d", {Variable::continuous("v", {1, 2}), Variable::discrete("k", {"a"}, {0, 0})});
    auto code = [&](const EventDef& ev) {
        try {
            label_track(ds, ev);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::Io;
    };
    EXPECT_EQ(code(EventDef::range("e", "nope", 0, 1)), Errc::UnknownVariable);
    EXPECT_EQ(code(EventDef::range("e", "k", 0, 1)), Errc::KindMismatch);
    EXPECT_EQ(code(EventDef::levels("e", "v", {"a"})), Errc::KindMismatch);
    EXPECT_EQ(code(EventDef::range("e", "v", 2, 1)), Errc::InvalidConstraint);
    EXPECT_EQ(code(EventDef::levels("e", "k", {"z"})), Errc::InvalidConstraint);
    EXPECT_EQ(code(EventDef::levels("e", "k", {})), Errc::InvalidConstraint);
}

TEST(LabelTrack, IndependentOfOtherVariables) {
    const Dataset a("d", {Variable::continuous("v", {1, 5, 3}), Variable::continuous("w", {9, 8, 7})});
    const Dataset b("d", {Variable::continuous("w", {0, 0, 1}), Variable::continuous("v", {1, 5, 3})});
    const auto ev = EventDef::range("e", "v", 2, 6);
    EXPECT_EQ(label_track(a, ev), label_track(b, ev));
}

TEST(EventDef, KeyIgnoresIdLabelAndLevelOrder) {
    const auto a = EventDef::levels("x", "k", {"b", "a", "a"}, "one");
    const auto b = EventDef::levels("y", "k", {"a", "b"}, "two");
    EXPECT_EQ(a.key(), b.key());
    EXPECT_EQ(EventDef::range("x", "v", -0.0, 1).key(), EventDef::range("y", "v", 0.0, 1).key());
    EXPECT_NE(EventDef::range("x", "v", 0, 1).key(), EventDef::range("x", "v", 0, 2).key());
}

TEST(Conjoin, Examples) {
    EXPECT_EQ(conjoin(LabelTrack{T, F, T}, LabelTrack{T, T, M}), (LabelTrack{T, F, M}));
    const LabelTrack x{T, F, M, T};
    const LabelTrack one[1] = {x};
    EXPECT_EQ(conjoin(std::span<const LabelTrack>(one, 1)), x);
    EXPECT_EQ(conjoin(LabelTrack(4, T), x), x);
    EXPECT_THROW(conjoin(std::span<const LabelTrack>()), Error);
    EXPECT_THROW(conjoin(LabelTrack{T}, LabelTrack{T, F}), Error);
}

TEST(Conjoin, AlgebraicLaws) {
    gen::Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const auto a = random_track(rng, 9), b = random_track(rng, 9), c = random_track(rng, 9);
        EXPECT_EQ(conjoin(a, b), conjoin(b, a));
        EXPECT_EQ(conjoin(conjoin(a, b), c), conjoin(a, conjoin(b, c)));
        EXPECT_EQ(conjoin(a, a), a);
        for (std::size_t t = 0; t < 9; ++t)
            if (a[t] == M) EXPECT_EQ(conjoin(a, b)[t], M);
    }
}

TEST(Negate, KeepsMissing) { EXPECT_EQ(negate(LabelTrack{T, F, M}), (LabelTrack{F, T, M})); }

TEST(SatisfiesPath, Examples) {
    EXPECT_TRUE(satisfies_path(LabelTrack{T, F, F}, LabelTrack{F, T, F}, Window{1, 1}, 0));
    EXPECT_FALSE(satisfies_path(LabelTrack{F, F, T}, LabelTrack{T, T, T}, Window{1, 2}, 2));
    EXPECT_FALSE(satisfies_path(LabelTrack{T, F, F}, LabelTrack{F, M, F}, Window{1, 1}, 0));
    EXPECT_TRUE(satisfies_path(LabelTrack{T, F, F}, LabelTrack{T, F, F}, Window{0, 0}, 0));
}

TEST(SatisfiesPath, PreconditionViolation) {
    try {
        satisfies_path(LabelTrack{F, T}, LabelTrack{T, T}, Window{0, 1}, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::PreconditionViolation);
    }
}

TEST(SatisfiesPath, FigureOneTwoOfFour) {
    const auto ds = fig1();
    const auto c = label_track(ds, EventDef::levels("c", "c", {"1"}));
    const auto e = label_track(ds, EventDef::range("e", "v_e", std::nextafter(1.5, 2.0), 3));
    std::size_t hits = 0, occ = 0;
    for (std::size_t t = 0; t < c.size(); ++t) {
        if (c[t] != T) continue;
        ++occ;
        hits += satisfies_path(c, e, Window{1, 1}, t);
    }
    EXPECT_EQ(occ, 4u);
    EXPECT_EQ(hits, 2u);
}

TEST(SatisfiesPath, WideningNeverLowersCount) {
    gen::Rng rng(5);
    for (int i = 0; i < 300; ++i) {
        const std::size_t n = 4 + rng.index(20);
        const auto c = random_track(rng, n), e = random_track(rng, n);
        const std::size_t r = rng.index(3), s = r + rng.index(3);
        const std::size_t r2 = r - std::min<std::size_t>(r, rng.index(2)), s2 = s + rng.index(3);
        std::size_t narrow = 0, wide = 0;
        for (std::size_t t = 0; t < n; ++t) {
            if (c[t] != T) continue;
            narrow += satisfies_path(c, e, Window{r, s}, t);
            wide += satisfies_path(c, e, Window{r2, s2}, t);
        }
        EXPECT_LE(narrow, wide);
    }
}

TEST(Window, Validation) {
    EXPECT_NO_THROW((Window{0, 4}.validate(5)));
    EXPECT_THROW((Window{2, 1}.validate(5)), Error);
    EXPECT_THROW((Window{0, 5}.validate(5)), Error);
}

TEST(EffectSpec, Validation) {
    const Dataset ds("d", {Variable::continuous("v", {1, 2}), Variable::discrete("k", {"a"}, {0, 0})});
    EXPECT_NO_THROW(EffectSpec::increase("v").validate(ds));
    EXPECT_THROW(EffectSpec::decrease("k").validate(ds), Error);
    EXPECT_NO_THROW(EffectSpec::value_in(EventDef::levels("e", "k", {"a"})).validate(ds));
    EXPECT_THROW(EffectSpec::value_in(EventDef::levels("e", "k", {"a"}), 0.0).validate(ds), Error);
    EXPECT_THROW(EffectSpec::value_in(EventDef::levels("e", "k", {"a"}), 1.5).validate(ds), Error);
    EXPECT_EQ(EffectSpec::increase("v").key(), "v|increase");
    EXPECT_EQ(EffectSpec::value_in(EventDef::range("e", "v", 1, 2)).key(), EventDef::range("z", "v", 1, 2).key());
}
