#include "diarist/benchmark.hpp"
#include "diarist/vector_index.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace diarist;

namespace {

constexpr const char* kModel = "random-64";

Embedding random_unit(std::mt19937_64& rng, std::size_t dim = 64) {
    std::normal_distribution<double> g;
    Embedding e;
    e.model_id = kModel;
    e.vector.resize(dim);
    double sq = 0;
    for (auto& x : e.vector) {
        x = g(rng);
        sq += x * x;
    }
    for (auto& x : e.vector) x /= std::sqrt(sq);
    return e;
}

VectorRecord entry_record(EntryId id, Embedding e) { return VectorRecord{OwnerKind::entry, id, "", std::move(e)}; }

class CountingProvider : public EmbeddingProvider {
public:
    explicit CountingProvider(std::size_t fail_after) : fail_after_(fail_after) {}
    const std::string& model_id() const override { return inner_.model_id(); }
    std::size_t dim() const override { return inner_.dim(); }
    Embedding embed(std::string_view text) const override {
        if (calls_++ >= fail_after_) throw ProviderError("quota exhausted", true);
        return inner_.embed(text);
    }
    std::vector<Embedding> embed_batch(std::span<const std::string> texts) const override {
        std::vector<Embedding> out;
        for (const auto& t : texts) out.push_back(embed(t));
        return out;
    }
    std::size_t fail_after_;
    mutable std::size_t calls_ = 0;

private:
    HashingEmbeddingProvider inner_;
};

}  // namespace

TEST(VectorStore, ExactScanMatchesBruteForceOracle) {
    std::mt19937_64 rng(1234);
    VectorStore store;
    std::vector<diarist::testing::IdVector> data;
    for (EntryId id = 1; id <= 1000; ++id) {
        auto e = random_unit(rng);
        data.emplace_back(id * 7 % 1009, e.vector);
        store.upsert(entry_record(id * 7 % 1009, e));
    }
    for (int qi = 0; qi < 100; ++qi) {
        auto q = random_unit(rng);
        const auto got = store.search_semantic(q, 10);
        const auto want = diarist::testing::brute_force_top_k(data, q.vector, 10);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].entry, want[i].first) << "query " << qi << " rank " << i;
            EXPECT_NEAR(got[i].cosine, want[i].second, 1e-9);
        }
    }
}

TEST(VectorStore, StoredEmbeddingRanksFirst) {
    std::mt19937_64 rng(9);
    VectorStore store;
    std::vector<Embedding> vs;
    for (EntryId id = 1; id <= 50; ++id) {
        vs.push_back(random_unit(rng));
        store.upsert(entry_record(id, vs.back()));
    }
    auto hits = store.search_semantic(vs[16], 3);
    ASSERT_FALSE(hits.empty());
    EXPECT_EQ(hits[0].entry, 17);
    EXPECT_NEAR(hits[0].cosine, 1.0, 1e-12);
}

TEST(VectorStore, RejectsNonPositiveK) {
    VectorStore store;
    std::mt19937_64 rng(1);
    EXPECT_THROW(store.search_semantic(random_unit(rng), 0), Error);
}

TEST(VectorStore, DimensionMismatchRejected) {
    VectorStore store;
    std::mt19937_64 rng(1);
    store.upsert(entry_record(1, random_unit(rng, 64)));
    EXPECT_THROW(store.search_semantic(random_unit(rng, 32), 3), Error);
}

TEST(VectorStore, FilterReturnsSubset) {
    std::mt19937_64 rng(77);
    VectorStore store;
    for (EntryId id = 1; id <= 200; ++id) store.upsert(entry_record(id, random_unit(rng)));
    EntryIdSet filter;
    for (EntryId id = 3; id <= 200; id += 11) filter.insert(id);
    for (int i = 0; i < 20; ++i) {
        auto hits = store.search_semantic(random_unit(rng), 50, &filter);
        EXPECT_EQ(hits.size(), filter.size());
        for (const auto& h : hits) EXPECT_TRUE(filter.contains(h.entry));
    }
    EntryIdSet none;
    EXPECT_TRUE(store.search_semantic(random_unit(rng), 5, &none).empty());
}

TEST(VectorStore, OnlyQueryModelIsSearched) {
    std::mt19937_64 rng(2);
    VectorStore store;
    store.upsert(entry_record(1, random_unit(rng)));
    auto other = random_unit(rng);
    other.model_id = "other";
    store.upsert(entry_record(2, other));
    auto hits = store.search_semantic(random_unit(rng), 10);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].entry, 1);
    EXPECT_EQ(store.size(), 2u);
}

TEST(VectorStore, UpsertValidatesAndReplaces) {
    VectorStore store;
    Embedding bad{{0.5, 0.5}, kModel};
    EXPECT_THROW(store.upsert(entry_record(1, bad)), Error);
    Embedding nan{{std::nan(""), 1.0}, kModel};
    EXPECT_THROW(store.upsert(entry_record(1, nan)), Error);
    EXPECT_THROW(store.upsert(entry_record(1, Embedding{{}, kModel})), Error);

    store.upsert(entry_record(1, Embedding{{1.0, 0.0}, kModel}));
    store.upsert(entry_record(1, Embedding{{0.0, 1.0}, kModel}));
    EXPECT_EQ(store.size(), 1u);
    EXPECT_EQ(store.find(OwnerKind::entry, 1, "", kModel)->embedding.vector[1], 1.0);
}

TEST(VectorStore, SaveLoadRoundTrip) {
    std::mt19937_64 rng(8);
    VectorStore store;
    for (EntryId id = 1; id <= 30; ++id) store.upsert(entry_record(id, random_unit(rng)));
    store.upsert(VectorRecord{OwnerKind::field, 4, "authors.bio", random_unit(rng)});
    std::stringstream buf;
    store.save(buf);
    auto back = VectorStore::load(buf);
    EXPECT_EQ(back.size(), store.size());
    EXPECT_EQ(back.count(OwnerKind::field), 1u);
    store.for_each([&](const VectorRecord& r) {
        const auto* b = back.find(r.kind, r.owner, r.field, r.embedding.model_id);
        ASSERT_NE(b, nullptr);
        EXPECT_EQ(b->embedding, r.embedding);
    });
    std::stringstream again;
    back.save(again);
    std::stringstream first;
    store.save(first);
    EXPECT_EQ(again.str(), first.str());
}

TEST(IndexEntries, OneRecordPerEntryAndIdempotent) {
    auto bench = generate_benchmark();
    HashingEmbeddingProvider provider;
    VectorStore store;
    EXPECT_EQ(index_entries(provider, bench.entries, store), (IndexCounts{125, 0}));
    EXPECT_EQ(store.count(OwnerKind::entry), 125u);
    index_entries(provider, bench.entries, store);
    EXPECT_EQ(store.size(), 125u);
    store.for_each([](const VectorRecord& r) {
        double sq = 0;
        for (double x : r.embedding.vector) sq += x * x;
        EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-6);
    });
}

TEST(IndexEntries, FailureReportsProgressAndResumes) {
    auto bench = generate_benchmark();
    VectorStore store;
    CountingProvider flaky(40);
    try {
        index_entries(flaky, bench.entries, store);
        FAIL();
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.completed(), 0u);
        EXPECT_TRUE(e.retryable());
    }
    HashingEmbeddingProvider provider;
    std::vector<Entry> first(bench.entries.begin(), bench.entries.begin() + 40);
    index_entries(provider, first, store);
    CountingProvider rest(85);
    EXPECT_EQ(index_entries(rest, bench.entries, store, true), (IndexCounts{125, 0}));
    EXPECT_EQ(rest.calls_, 85u);
    EXPECT_EQ(store.size(), 125u);
}

TEST(IndexFields, EmptyBioSkippedAndCounted) {
    HashingEmbeddingProvider provider;
    std::vector<Author> authors(2);
    authors[0].id = 1;
    authors[0].name = "A";
    authors[0].bio = "Teacher in Moscow";
    authors[1].id = 2;
    authors[1].name = "B";
    const std::vector<FieldRef> fields = {{"authors", "bio"}};
    VectorStore store;
    EXPECT_EQ(index_fields(provider, authors, fields, store), (IndexCounts{1, 1}));
    EXPECT_TRUE(store.find(OwnerKind::field, 1, "authors.bio", provider.model_id()));
    EXPECT_FALSE(store.find(OwnerKind::field, 2, "authors.bio", provider.model_id()));

    const std::vector<FieldRef> bad = {{"entries", "text"}};
    EXPECT_THROW(index_fields(provider, authors, bad, store), Error);
}

TEST(FieldScores, AffineCosineMap) {
    VectorStore store;
    const std::vector<FieldRef> fields = {{"authors", "bio"}, {"authors", "name"}};
    store.upsert(VectorRecord{OwnerKind::field, 1, "authors.bio", Embedding{{1.0, 0.0}, kModel}});
    const Embedding same{{1.0, 0.0}, kModel}, opposite{{-1.0, 0.0}, kModel}, ortho{{0.0, 1.0}, kModel};
    EXPECT_NEAR(field_scores(same, 1, fields, store).at("authors.bio"), 1.0, 1e-15);
    EXPECT_NEAR(field_scores(opposite, 1, fields, store).at("authors.bio"), 0.0, 1e-15);
    EXPECT_NEAR(field_scores(ortho, 1, fields, store).at("authors.bio"), 0.5, 1e-15);
    EXPECT_EQ(field_scores(same, 1, fields, store).size(), 1u);
    EXPECT_TRUE(field_scores(same, 2, fields, store).empty());
}

TEST(FieldRef, Parse) {
    EXPECT_EQ(parse_field_ref("Authors.Bio"), (FieldRef{"authors", "bio"}));
    EXPECT_FALSE(parse_field_ref("bio"));
    EXPECT_FALSE(parse_field_ref(".bio"));
    EXPECT_FALSE(parse_field_ref("authors."));
}
