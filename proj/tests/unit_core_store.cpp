#include <gtest/gtest.h>
#include <zlib.h>

#include <set>
#include <sstream>

#include "averimatec/store/builder.hpp"
#include "averimatec/store/html.hpp"
#include "averimatec/store/pdf.hpp"
#include "averimatec/store/persist.hpp"
#include "support.hpp"

using namespace averimatec;
using namespace averimatec::store;

// text ------------------------------------------------------------------------

TEST(Text, TokensAreWhitespaceSeparated) {
  EXPECT_EQ(text::count_tokens(""), 0u);
  EXPECT_EQ(text::count_tokens("  a\tb\n c  "), 3u);
  EXPECT_EQ(text::count_tokens("naïve café x"), 3u);
  auto spans = text::whitespace_spans(" ab  cd");
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[1].begin, 5u);
}

TEST(Text, WordTokensLowercaseAndSplitPunctuation) {
  EXPECT_EQ(text::word_tokens("The Bridge, in LAGOS!"), (std::vector<std::string>{"the", "bridge", "in", "lagos"}));
}

TEST(Text, Placeholders) {
  auto found = text::find_placeholders("see [IMG_2] and [IMG_10], not [IMG_] or [img_1]");
  ASSERT_EQ(found.size(), 2u);
  EXPECT_EQ(found[0].index, 2u);
  EXPECT_EQ(found[1].index, 10u);
  EXPECT_EQ(text::placeholder(3), "[IMG_3]");
}

TEST(Text, Base64RoundTripAndRejectsGarbage) {
  for (std::string s : std::vector<std::string>{"", "a", "ab", "abc", "abcd", std::string("\0\xff\x10", 3)}) {
    auto enc = text::base64_encode(s);
    ASSERT_EQ(text::base64_decode(enc), s);
  }
  EXPECT_EQ(text::base64_encode("hello"), "aGVsbG8=");
  EXPECT_FALSE(text::base64_decode("a$bc"));
}

TEST(Text, Sha256KnownVector) {
  EXPECT_EQ(text::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Text, UrlHelpers) {
  EXPECT_EQ(text::normalize_url("https://a.com/x/#frag"), "https://a.com/x");
  EXPECT_EQ(text::url_host("https://user@WWW.Example.com:8080/p?q"), "www.example.com");
  EXPECT_EQ(text::url_host("no-scheme"), "");
}

TEST(Text, CollapseAndTrim) {
  EXPECT_EQ(text::collapse_whitespace("  a \n\n b\t"), "a b");
  EXPECT_EQ(text::trim("\t x y \n"), "x y");
}

// date ------------------------------------------------------------------------

TEST(DateTest, ParseAndOrder) {
  auto d = Date::parse("2024-02-29");
  EXPECT_EQ(d.str(), "2024-02-29");
  EXPECT_LT(Date::parse("2024-12-31"), Date::parse("2025-01-01"));
  EXPECT_FALSE(Date::try_parse("2023-02-29"));
  EXPECT_FALSE(Date::try_parse("2024-13-01"));
  EXPECT_FALSE(Date::try_parse("yesterday"));
  EXPECT_THROW(Date::parse("2024/01/01"), Error);
}

// model and io ----------------------------------------------------------------

TEST(Model, VerdictAndClaimTypeParsing) {
  EXPECT_EQ(parse_verdict("Supported"), Verdict::Supported);
  EXPECT_EQ(parse_verdict("Not Enough Evidence"), Verdict::NotEnoughEvidence);
  EXPECT_EQ(parse_verdict("Conflicting Evidence/Cherrypicking"), Verdict::ConflictingCherryPicking);
  EXPECT_EQ(parse_verdict("NEE"), Verdict::NotEnoughEvidence);
  EXPECT_FALSE(parse_verdict("Maybe"));
  EXPECT_THROW(json("Maybe").get<Verdict>(), Error);
}

TEST(Io, ClaimsRoundTrip) {
  auto claims = load_claims(support::fixture("pipeline/claims.jsonl"), Split::Dev);
  ASSERT_EQ(claims.size(), 3u);
  std::istringstream in(serialize_claims(claims));
  EXPECT_EQ(read_claims(in, Split::Dev), claims);
}

TEST(Io, ClaimValidationDependsOnSplit) {
  const std::string no_gold =
      R"({"id":"x","text":"t","images":["aGk="],"claim_date":"2024-01-01","gold_verdict":"Refuted"})";
  std::istringstream test_in(no_gold + "\n");
  EXPECT_EQ(read_claims(test_in, Split::Test).size(), 1u);
  std::istringstream dev_in(no_gold + "\n");
  EXPECT_THROW(read_claims(dev_in, Split::Dev), Error);
  std::istringstream no_images(R"({"id":"x","text":"t","images":[],"claim_date":"2024-01-01","gold_verdict":"Refuted"})");
  EXPECT_THROW(read_claims(no_images, Split::Test), Error);
}

TEST(Io, MalformedLineNamesTheLine) {
  std::istringstream in("{}\n{not json\n");
  try {
    for_each_jsonl(in, [](const json&, std::size_t) {});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

TEST(Io, SubmissionRoundTrip) {
  const auto golden = read_file(support::fixture("pipeline/golden_submission.jsonl"));
  auto sub = parse_submission(golden);
  EXPECT_EQ(sub.records.size(), 3u);
  EXPECT_EQ(serialize_submission(sub), golden);
  ASSERT_NE(sub.find("pc2"), nullptr);
  EXPECT_EQ(sub.find("nope"), nullptr);
}

TEST(Validation, ErrorsAndWarnings) {
  auto claims = load_claims(support::fixture("pipeline/claims.jsonl"), Split::Dev);
  Submission sub;
  SubmissionRecord r;
  r.claim_id = "unknown";
  sub.records.push_back(r);
  sub.records.push_back(r);
  auto report = validate_submission(sub, claims);
  EXPECT_FALSE(report.ok());

  Submission capped;
  SubmissionRecord ok;
  ok.claim_id = claims[0].id;
  for (int i = 0; i < 11; ++i) ok.evidence.push_back({"text", {}, "https://e.org", ""});
  capped.records.push_back(ok);
  auto warn = validate_submission(capped, claims);
  EXPECT_TRUE(warn.ok());
  EXPECT_FALSE(warn.messages().empty());

  Submission bad_ref;
  SubmissionRecord b;
  b.claim_id = claims[0].id;
  b.evidence.push_back({"see [IMG_2]", {Base64Image{"aGk="}}, "https://e.org", ""});
  bad_ref.records.push_back(b);
  EXPECT_FALSE(validate_submission(bad_ref, claims).ok());
}

// html / pdf ------------------------------------------------------------------

TEST(Html, MainTextSkipsChrome) {
  const std::string page = R"(<html><head><title>t</title><script>var x = 1;</script></head><body>
    <nav>Home | About</nav><div class="cookie-banner">Accept cookies</div>
    <article><p>The bridge was photographed in 2019 &amp; published in <b>May</b>.</p></article>
    <footer>Copyright</footer></body></html>)";
  auto body = html::extract_main_text(page);
  EXPECT_NE(body.find("The bridge was photographed in 2019 & published in May."), std::string::npos);
  EXPECT_EQ(body.find("var x"), std::string::npos);
  EXPECT_EQ(body.find("Home | About"), std::string::npos);
  EXPECT_EQ(body.find("Accept cookies"), std::string::npos);
  EXPECT_EQ(body.find("Copyright"), std::string::npos);
}

TEST(Html, Entities) { EXPECT_EQ(html::detail::decode_entities("&lt;a&gt; &#65;&#x42; &quot;"), "<a> AB \""); }

namespace {

std::string pdf_with_stream(const std::string& stream, const std::string& filter) {
  return "%PDF-1.4\n1 0 obj\n<< /Length " + std::to_string(stream.size()) + filter + " >>\nstream\n" + stream +
         "\nendstream\nendobj\n%%EOF\n";
}

std::string deflate(const std::string& in) {
  uLongf len = compressBound(in.size());
  std::string out(len, '\0');
  compress(reinterpret_cast<Bytef*>(out.data()), &len, reinterpret_cast<const Bytef*>(in.data()), in.size());
  out.resize(len);
  return out;
}

}  // namespace

TEST(Pdf, PlainAndFlateStreams) {
  const std::string content = "BT /F1 12 Tf (Flood photo from 2019) Tj ET\nBT [(Lagos ) -250 (bridge)] TJ ET";
  auto plain = pdf::extract_text(pdf_with_stream(content, ""));
  EXPECT_NE(plain.find("Flood photo from 2019"), std::string::npos);
  EXPECT_NE(plain.find("Lagos"), std::string::npos);
  auto flate = pdf::extract_text(pdf_with_stream(deflate(content), " /Filter /FlateDecode"));
  EXPECT_EQ(flate, plain);
  EXPECT_TRUE(pdf::is_pdf("application/octet-stream", "%PDF-1.7"));
}

// collection ------------------------------------------------------------------

TEST(Blocklist, MatchesHostsAndPathPrefixes) {
  auto b = Blocklist::defaults();
  EXPECT_TRUE(b.blocks("https://www.snopes.com/fact-check/x"));
  EXPECT_TRUE(b.blocks("https://sub.snopes.com/"));
  EXPECT_TRUE(b.blocks("https://www.reuters.com/fact-check/abc"));
  EXPECT_FALSE(b.blocks("https://www.reuters.com/world/abc"));
  EXPECT_FALSE(b.blocks("https://notsnopes.com/x"));
  auto custom = Blocklist::parse("# comment\n\nexample.org/private\n");
  EXPECT_TRUE(custom.blocks("https://example.org/private/page"));
  EXPECT_FALSE(custom.blocks("https://example.org/public"));
}

TEST(Collect, SearchFiltersDatesBlocklistAndPageSize) {
  json fx{{"search",
           {{"q",
             {{{"url", "https://a.com/1"}, {"date", "2024-01-01"}},
              {{"url", "https://a.com/late"}, {"date", "2024-03-01"}},
              {{"url", "https://a.com/same-day"}, {"date", "2024-02-01"}},
              {{"url", "https://www.snopes.com/x"}, {"date", "2023-01-01"}},
              {{"url", "https://a.com/undated"}, {"date", nullptr}}}}}}};
  FixtureServices s(fx);
  auto r = search_text(make_query("c", "q", QueryFamily::GeneratedQuestions), Date{2024, 2, 1}, s);
  EXPECT_EQ(r.urls, (std::vector<std::string>{"https://a.com/1", "https://a.com/undated"}));
  SearchPolicy small;
  small.page_size = 1;
  EXPECT_EQ(search_text(make_query("c", "q", QueryFamily::GeneratedQuestions), Date{2024, 2, 1}, s, small).urls.size(),
            1u);
}

TEST(Collect, RetriesTransientFailures) {
  json fx{{"search", {{"q", {{{"url", "https://a.com/1"}}}}}}, {"fail_times", {{"search:q", 2}}}};
  FixtureServices s(fx);
  std::vector<long long> sleeps;
  SearchPolicy p;
  p.retry.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); };
  auto r = search_text(make_query("c", "q", QueryFamily::GeneratedQuestions), Date{2025, 1, 1}, s, p);
  EXPECT_EQ(r.urls.size(), 1u);
  EXPECT_TRUE(r.failures.empty());
  EXPECT_EQ(sleeps, (std::vector<long long>{200, 400}));

  json always{{"fail", {"search:q"}}};
  FixtureServices broken(always);
  auto f = search_text(make_query("c", "q", QueryFamily::GeneratedQuestions), Date{2025, 1, 1}, broken, p);
  EXPECT_TRUE(f.urls.empty());
  ASSERT_EQ(f.failures.size(), 1u);
  EXPECT_EQ(f.failures[0].what, "search:q");
}

TEST(Collect, ReverseImageSearchFlagsUndatedPages) {
  const Base64Image img{text::base64_encode("img")};
  json fx{{"ris", {{text::sha256_hex("img"), {"https://p.com/old", "https://p.com/new", "https://p.com/undated"}}}},
          {"dates", {{"https://p.com/old", "2020-01-01"}, {"https://p.com/new", "2024-05-01"}}}};
  FixtureServices s(fx);
  auto r = reverse_image_search(img, Date{2024, 1, 1}, s, s);
  ASSERT_EQ(r.pages.size(), 2u);
  EXPECT_EQ(r.pages[0].url, "https://p.com/old");
  EXPECT_FALSE(r.pages[0].undated);
  EXPECT_TRUE(r.pages[1].undated);
  auto strict = reverse_image_search(img, Date{2024, 1, 1}, s, s, RisPolicy{true, {}});
  EXPECT_EQ(strict.urls(), (std::vector<std::string>{"https://p.com/old"}));
}

TEST(Collect, ScrapeDispatchesOnContent) {
  json fx{{"fetch",
           {{"https://h.com", {{"status", 200}, {"content_type", "text/html"}, {"body", "<p>Main body text here.</p>"}}},
            {"https://t.com", {{"status", 200}, {"content_type", "text/plain"}, {"body", "  plain  "}}},
            {"https://d.com", {{"status", 403}, {"body", "no"}}}}}};
  FixtureServices s(fx);
  EXPECT_EQ(scrape("https://h.com", s).text, "Main body text here.");
  EXPECT_EQ(scrape("https://t.com", s).text, "plain");
  EXPECT_FALSE(scrape("https://d.com", s).ok());
  EXPECT_FALSE(scrape("https://missing.com", s).ok());
}

// assembly and persistence ----------------------------------------------------

TEST(Assemble, SeededShuffleIsAPermutationAndDeterministic) {
  std::vector<int> base(50);
  std::iota(base.begin(), base.end(), 0);
  auto a = base, b = base, c = base, d = base;
  seeded_shuffle(a, 1, "x");
  seeded_shuffle(b, 1, "x");
  seeded_shuffle(c, 2, "x");
  seeded_shuffle(d, 1, "y");
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_NE(a, d);
  std::sort(a.begin(), a.end());
  EXPECT_EQ(a, base);
}

TEST(Assemble, GoldWinsOverFilters) {
  KnowledgeStoreEntry late;
  late.url = "https://www.snopes.com/gold";
  late.text = "gold text";
  late.publication_date = Date{2030, 1, 1};
  auto a = assemble_store("c", Date{2024, 1, 1}, {late}, {"https://www.snopes.com/gold"}, 0);
  ASSERT_EQ(a.store.entries.size(), 1u);
  EXPECT_TRUE(a.store.entries[0].gold);
  EXPECT_EQ(a.store.entries[0].text, "gold text");
  EXPECT_FALSE(a.warnings.empty());
}

TEST(Assemble, StrictDatesDropUndatedPages) {
  KnowledgeStoreEntry e;
  e.url = "https://p.com";
  e.undated_flag = true;
  EXPECT_EQ(assemble_store("c", Date{2024, 1, 1}, {e}, {}, 0).store.entries.size(), 1u);
  AssemblyPolicy strict;
  strict.strict_dates = true;
  EXPECT_TRUE(assemble_store("c", Date{2024, 1, 1}, {e}, {}, 0, strict).store.entries.empty());
  AssemblyPolicy no_filter;
  no_filter.temporal_filter = false;
  e.undated_flag = false;
  e.publication_date = Date{2030, 1, 1};
  EXPECT_EQ(assemble_store("c", Date{2024, 1, 1}, {e}, {}, 0, no_filter).store.entries.size(), 1u);
}

TEST(Persist, SaveLoadRoundTrip) {
  auto stores = support::assemble_fixture_stores(load_claims(support::fixture("pipeline/claims.jsonl"), Split::Dev),
                                                 support::fixture("pipeline/entries.jsonl"));
  auto root = support::temp_dir("persist");
  for (const auto& [id, s] : stores) save_store(s, root);
  auto loaded = load_stores(root);
  ASSERT_EQ(loaded.size(), stores.size());
  for (const auto& s : loaded) EXPECT_EQ(s, stores.at(s.claim_id));
  std::size_t images = 0;
  for (const auto& e : loaded[0].entries) images += e.media ? 1 : 0;
  std::size_t files = 0;
  for (const auto& f : fs::directory_iterator(root / loaded[0].claim_id / "images")) files += f.is_regular_file();
  EXPECT_EQ(files, images);
  EXPECT_GT(images, 0u);
  fs::remove_all(root);
}

TEST(Stats, CountsPerChannel) {
  ClaimStore s;
  auto add = [&](Channel c, std::string text, bool media) {
    KnowledgeStoreEntry e;
    e.url = "https://x/" + std::to_string(s.entries.size());
    e.channel = c;
    e.text = std::move(text);
    if (media) e.media = Base64Image{"aGk="};
    s.entries.push_back(e);
  };
  add(Channel::GoogleSearchText, "one two three", false);
  add(Channel::GoogleSearchText, "", false);
  add(Channel::ReverseImageSearch, "four five", false);
  add(Channel::GoogleSearchImage, "", true);
  add(Channel::GoogleSearchImage, "", true);
  auto st = compute_stats(s);
  EXPECT_EQ(st.search_text, (ChannelStats{2, 1, 3}));
  EXPECT_EQ(st.reverse_image, (ChannelStats{1, 1, 2}));
  EXPECT_EQ(st.image_count, 2u);
}

// builder ---------------------------------------------------------------------

namespace {

struct SampleBuild {
  std::vector<Claim> claims = load_claims(support::data("sample/claims.jsonl"), Split::Dev);
  json fixture = json::parse(read_file(support::data("sample/search_fixture.json")));
};

}  // namespace

TEST(Builder, SampleStoresRespectTheCollectionRules) {
  SampleBuild sample;
  pipeline::MockModelAdapter mock;
  for (const auto& claim : sample.claims) {
    FixtureServices services(sample.fixture);
    auto r = build_store(claim, mock, Services::from(services), {.seed = 1, .workers = 2});
    EXPECT_FALSE(r.queries.empty());
    ASSERT_FALSE(r.store.entries.empty()) << claim.id;
    std::set<std::string> gold, seen;
    for (const auto& u : support::gold_urls(claim)) gold.insert(text::normalize_url(u));
    std::size_t gold_found = 0;
    for (const auto& e : r.store.entries) {
      const auto key = text::normalize_url(e.url);
      EXPECT_TRUE(seen.insert(key).second) << e.url;
      if (gold.contains(key)) {
        ++gold_found;
        continue;
      }
      EXPECT_FALSE(Blocklist::defaults().blocks(e.url)) << e.url;
      if (e.publication_date) EXPECT_LT(*e.publication_date, claim.claim_date) << e.url;
    }
    EXPECT_EQ(gold_found, gold.size()) << claim.id;
  }
}

TEST(Builder, DeterministicAcrossWorkerCounts) {
  SampleBuild sample;
  pipeline::MockModelAdapter mock;
  FixtureServices a(sample.fixture), b(sample.fixture);
  auto one = build_store(sample.claims[0], mock, Services::from(a), {.seed = 3, .workers = 1});
  auto many = build_store(sample.claims[0], mock, Services::from(b), {.seed = 3, .workers = 8});
  EXPECT_EQ(one.store, many.store);
  EXPECT_EQ(one.failures, many.failures);
}

TEST(Builder, RecordedFixtureReplaysIdentically) {
  SampleBuild sample;
  pipeline::MockModelAdapter mock;
  FixtureServices live(sample.fixture);
  FixtureRecorder recorder(&live, &live, &live, &live, &live);
  auto recorded = build_store(sample.claims[1], mock, Services{&recorder, &recorder, &recorder, &recorder, &recorder},
                              {.seed = 9});
  FixtureServices replay(recorder.fixture());
  auto replayed = build_store(sample.claims[1], mock, Services::from(replay), {.seed = 9});
  EXPECT_EQ(recorded.store, replayed.store);
}

TEST(Builder, ImageCapLimitsEachQuery) {
  SampleBuild sample;
  pipeline::MockModelAdapter mock;
  const auto& claim = sample.claims[0];
  FixtureServices probe(sample.fixture);
  std::vector<std::string> queries;
  for (const auto& q : build_store(claim, mock, Services::from(probe)).queries) {
    if (std::find(queries.begin(), queries.end(), q.query_text) == queries.end()) queries.push_back(q.query_text);
  }
  ASSERT_GE(queries.size(), 2u);
  // Five image results per query; neighbouring queries share two of them.
  auto fx = sample.fixture;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    json hits = json::array();
    for (std::size_t i = 0; i < 5; ++i) {
      auto url = fmt::format("https://img.example.com/{}.jpg", 3 * q + i);
      hits.push_back({{"url", url}, {"date", "2020-01-01"}});
      fx["fetch"][url] = {{"status", 200}, {"content_type", "image/jpeg"}, {"body", url}};
    }
    fx["image_search"][queries[q]] = hits;
  }
  auto count_images = [](const ClaimStore& s) {
    std::size_t n = 0;
    for (const auto& e : s.entries) n += e.channel == Channel::GoogleSearchImage;
    return n;
  };
  FixtureServices full(fx), capped(fx), none(fx);
  EXPECT_EQ(count_images(build_store(claim, mock, Services::from(full)).store), 3 * queries.size() + 2);
  EXPECT_EQ(count_images(build_store(claim, mock, Services::from(capped), {.image_cap = 1}).store), queries.size());
  EXPECT_EQ(count_images(build_store(claim, mock, Services::from(none), {.image_cap = 0}).store), 0u);
}

TEST(Builder, MissingServiceIsAnError) {
  SampleBuild sample;
  pipeline::MockModelAdapter mock;
  FixtureServices s(sample.fixture);
  auto services = Services::from(s);
  services.dater = nullptr;
  EXPECT_THROW(build_store(sample.claims[0], mock, services), Error);
}
