#include <map>
#include <regex>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "edgesim/discovery.hpp"
#include "edgesim/rng.hpp"

using namespace edgesim;

namespace {

std::string parse_error_label(const std::string& name) {
  try {
    parse_lookup(name);
  } catch (const ParseError& e) {
    return e.label();
  }
  return "<accepted>";
}

Registry three_nodes() {
  Registry r;
  for (const char* n : {"a", "b", "c"}) r.register_service("objd", n);
  return r;
}

}  // namespace

TEST(ParseLookup, Examples) {
  EXPECT_EQ(parse_lookup("objd.inference.service.consul").service, "objd");
  EXPECT_THROW(parse_lookup("OBJD.inference.service.consul"), ParseError);
  EXPECT_THROW(parse_lookup("objd.inference.consul"), ParseError);
}

TEST(ParseLookup, ErrorsNameTheOffendingLabel) {
  EXPECT_EQ(parse_error_label("objd.inference.consul"), "service");
  EXPECT_EQ(parse_error_label("OBJD.inference.service.consul"), "OBJD");
  EXPECT_EQ(parse_error_label("objd.inference.service.local"), "local");
  EXPECT_EQ(parse_error_label(".inference.service.consul"), "");
  EXPECT_EQ(parse_error_label("ob_jd.inference.service.consul"), "ob_jd");
  EXPECT_EQ(parse_error_label("x.objd.inference.service.consul"), "objd");
}

// The accepted language is exactly this regular expression.
TEST(ParseLookup, AgreesWithRegexOracleOnFuzzedNames) {
  const std::regex grammar("^([a-z0-9-]+)\\.inference\\.service\\.consul$");
  const std::vector<std::string> pieces{"objd", "inference", "service", "consul", ".", "..",
                                        "-", "A", "_", "x1", "", "Consul", "a-b", " "};
  RngStream rng(41);
  int accepted = 0;
  for (int i = 0; i < 20'000; ++i) {
    std::string s;
    if (rng.uniform_open() < 0.5) {
      // Mutate a valid name at one random position.
      s = "objd.inference.service.consul";
      const auto pos = static_cast<std::size_t>(rng.uniform(0, static_cast<double>(s.size())));
      const auto& p = pieces[static_cast<std::size_t>(rng.uniform(0, pieces.size()))];
      s = s.substr(0, pos) + p + s.substr(pos + (rng.uniform_open() < 0.5 ? 1 : 0));
    } else {
      const int parts = 1 + static_cast<int>(rng.uniform(0, 7));
      for (int k = 0; k < parts; ++k) {
        s += pieces[static_cast<std::size_t>(rng.uniform(0, pieces.size()))];
      }
    }
    std::smatch m;
    const bool ok = std::regex_match(s, m, grammar);
    if (ok) {
      ++accepted;
      ASSERT_EQ(parse_lookup(s).service, m[1].str()) << s;
    } else {
      ASSERT_THROW(parse_lookup(s), ParseError) << s;
    }
  }
  EXPECT_GT(accepted, 100);
}

TEST(ParseLookup, RoundTrip) {
  RngStream rng(42);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789-";
  for (int i = 0; i < 5000; ++i) {
    LookupName l;
    const int len = 1 + static_cast<int>(rng.uniform(0, 12));
    for (int k = 0; k < len; ++k) {
      l.service += alphabet[static_cast<std::size_t>(rng.uniform(0, alphabet.size()))];
    }
    ASSERT_EQ(parse_lookup(format_lookup(l)), l);
  }
}

TEST(Resolve, FiltersUnhealthyAndUnreachable) {
  Registry r = three_nodes();
  std::map<std::string, ResolveInput> in{{"a", {true, 3}}, {"b", {true, 1}}, {"c", {true, 2}}};
  EXPECT_EQ(resolve(r, "objd", in), (std::vector<std::string>{"b", "c", "a"}));

  r.set_node_status("c", ServiceStatus::unhealthy);
  EXPECT_EQ(resolve(r, "objd", in).size(), 2u);

  in["b"].reachable = false;
  EXPECT_EQ(resolve(r, "objd", in), (std::vector<std::string>{"a"}));

  for (const char* n : {"a", "b", "c"}) r.set_node_status(n, ServiceStatus::unhealthy);
  EXPECT_TRUE(resolve(r, "objd", in).empty());
  EXPECT_TRUE(resolve(r, "nope", in).empty());
}

TEST(Resolve, TiesBrokenById) {
  Registry r;
  for (const char* n : {"zeta", "alpha", "mid"}) r.register_service("objd", n);
  std::map<std::string, ResolveInput> in{{"zeta", {true, 5}}, {"alpha", {true, 5}}, {"mid", {true, 5}}};
  EXPECT_EQ(resolve(r, "objd", in), (std::vector<std::string>{"alpha", "mid", "zeta"}));
}

TEST(Resolve, NeverReturnsUnhealthyOrUnreachableRandomised) {
  RngStream rng(43);
  for (int k = 0; k < 2000; ++k) {
    Registry r;
    std::map<std::string, ResolveInput> in;
    std::map<std::string, bool> healthy;
    const int n = 1 + static_cast<int>(rng.uniform(0, 8));
    for (int i = 0; i < n; ++i) {
      const std::string id = "n" + std::to_string(i);
      healthy[id] = rng.uniform_open() < 0.7;
      r.register_service("objd", id, healthy[id] ? ServiceStatus::healthy : ServiceStatus::unhealthy);
      in[id] = {rng.uniform_open() < 0.8, std::floor(rng.uniform(0, 4))};
    }
    const auto out = resolve(r, "objd", in);
    for (std::size_t i = 0; i < out.size(); ++i) {
      ASSERT_TRUE(healthy[out[i]] && in[out[i]].reachable);
      if (i) {
        const auto& p = in[out[i - 1]];
        const auto& c = in[out[i]];
        ASSERT_TRUE(p.score_ms < c.score_ms || (p.score_ms == c.score_ms && out[i - 1] < out[i]));
      }
    }
    std::size_t expected = 0;
    for (const auto& [id, h] : healthy) expected += h && in[id].reachable;
    ASSERT_EQ(out.size(), expected);
  }
}

TEST(Registry, PropagationDelay) {
  Registry r = three_nodes();
  r.schedule_node_status("a", ServiceStatus::unhealthy, 2.0);
  r.advance(1.9);
  EXPECT_EQ(r.records_for("objd")[0].status, ServiceStatus::healthy);
  r.advance(2.0);
  EXPECT_EQ(r.records_for("objd")[0].status, ServiceStatus::unhealthy);
}

TEST(Registry, ServiceNodePairIsUnique) {
  Registry r = three_nodes();
  r.register_service("objd", "a", ServiceStatus::unhealthy);
  EXPECT_EQ(r.records().size(), 3u);
}

TEST(Gossip, Bandwidth) {
  EXPECT_NEAR(gossip_bandwidth(13.672, 0.015e-3) / 7291.7, 1.0, 1e-3);
  EXPECT_EQ(gossip_bandwidth(0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(gossip_bandwidth(2 * 13.672, 0.015e-3), 2 * gossip_bandwidth(13.672, 0.015e-3));
  EXPECT_THROW(gossip_bandwidth(1, 0), ConfigError);
  EXPECT_THROW(gossip_bandwidth(1, -1), ConfigError);
}
