// Frozen three-turn session over the golden corpus. Regenerate with
// build/tests/update-golden after an intended behaviour change.

#include "fixtures.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

using namespace diarist;
using namespace diarist::testing;

TEST(Golden, ReplayMatchesFrozenTurnsByteForByte) {
    std::size_t calls = 0;
    const auto replayed = replay_golden(&calls);
    EXPECT_EQ(replayed, read_file(data_dir() / "golden" / "turns.json"));
    EXPECT_EQ(calls, 9u);
}

TEST(Golden, ReplayIsStableAcrossRuns) { EXPECT_EQ(replay_golden(), replay_golden()); }

TEST(Golden, AuthoringGatewayAndReplayAgree) {
    auto author = make_golden_author_gateway();
    EXPECT_EQ(turns_to_golden_text(run_golden_session(*author)), replay_golden());
}

TEST(Golden, TranscriptHasOneRecordPerCall) {
    const auto text = read_file(data_dir() / "golden" / "transcript.jsonl");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 9);
}

TEST(Golden, TurnsShowTheExpectedPipelineBehaviour) {
    const auto turns = nlohmann::json::parse(read_file(data_dir() / "golden" / "turns.json"));
    ASSERT_EQ(turns.size(), 3u);

    EXPECT_EQ(turns[0]["repairs"], 1);
    EXPECT_TRUE(turns[0]["sql_filter"].is_null());
    EXPECT_EQ(turns[0]["answer_rendered"].get<std::string>().find("[9]"), std::string::npos);

    EXPECT_NE(turns[1]["generated_query"], turns[1]["user_text"]);
    EXPECT_FALSE(turns[1]["query_fallback"].get<bool>());
    EXPECT_EQ(turns[1]["sql_filter"], nlohmann::json({1, 2, 7}));
    for (const auto& c : turns[1]["candidates"]) {
        EXPECT_TRUE(c["entry_id"] == 1 || c["entry_id"] == 2 || c["entry_id"] == 7);
    }

    EXPECT_TRUE(turns[2]["query_fallback"].get<bool>());
    EXPECT_EQ(turns[2]["generated_query"], turns[2]["user_text"]);
    EXPECT_EQ(turns[2]["sql_filter"], nlohmann::json({3, 4, 8, 10}));
    EXPECT_NE(turns[2]["answer_rendered"].get<std::string>().find("https://archive.example.org/diary/4"),
              std::string::npos);
}

TEST(Golden, StubMissSurfacesAsWarningNotCrash) {
    ScriptedGateway empty;
    const auto turns = run_golden_session(empty);
    ASSERT_EQ(turns.size(), 3u);
    for (const auto& t : turns) {
        EXPECT_TRUE(t.query_fallback);
        EXPECT_TRUE(t.degraded);
        EXPECT_FALSE(t.warnings.empty());
    }
}
