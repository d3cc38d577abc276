#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dermeval/report.hpp"

using namespace dermeval;

TEST_CASE("percent rendering rounds half-up at one decimal") {
  // 121/176 = 68.75 % exactly: the tie goes up
  CHECK(Rate{121, 176}.percent_tenths() == 688);
  CHECK(Rate{30, 176}.percent_tenths() == 170);
  CHECK(Rate{25, 176}.percent_tenths() == 142);
  CHECK(Rate{156, 176}.percent_tenths() == 886);
  CHECK(Rate{151, 171}.percent_tenths() == 883);
  CHECK(Rate{5, 25}.percent_tenths() == 200);
  CHECK(Rate{5, 176}.percent_tenths() == 28);

  CHECK(percent_from_tenths(688) == "68.8");
  CHECK(percent_from_tenths(1000) == "100.0");
  CHECK(percent_from_tenths(28) == "2.8");
  CHECK(percent_from_tenths(0) == "0.0");

  CHECK(percent1(0.2924017738) == "29.2");
  CHECK(percent1(0.1581138830) == "15.8");
  CHECK(percent1(0.4781762499) == "47.8");
  CHECK(percent1(1.0) == "100.0");
}

TEST_CASE("two-decimal rendering") {
  CHECK(fixed2(0.69) == "0.69");
  CHECK(fixed2(0.5325) == "0.53");
  CHECK(fixed2(0.51) == "0.51");
  CHECK(fixed2(1.0) == "1.00");
  CHECK(fixed2(0.0) == "0.00");
  CHECK(fixed2(0.125) == "0.13");  // exact tie, half-up
}

TEST_CASE("csv escaping") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_row({"a", "b,c", "d"}) == "a,\"b,c\",d\n");
}

TEST_CASE("confusion rendering") {
  const ConfusionMatrix cm{5, 20, 0, 151};
  CHECK(render_confusion_csv(cm) ==
        ",expert_malignant,expert_benign,total\n"
        "system_malignant,5,20,25\n"
        "system_benign,0,151,151\n"
        "total,5,171,176\n");

  const std::string md = render_confusion_markdown(cm);
  CHECK(md.find("TP = 5") != std::string::npos);
  CHECK(md.find("TN = 151") != std::string::npos);
}

TEST_CASE("metrics rendering") {
  const ConfusionMatrix cm{5, 20, 0, 151};
  const std::string csv = render_metrics_csv(metrics(cm), cm);
  CHECK(csv.find("sensitivity,100.0\n") != std::string::npos);
  CHECK(csv.find("specificity,88.3\n") != std::string::npos);
  CHECK(csv.find("ppv,20.0\n") != std::string::npos);
  CHECK(csv.find("npv,100.0\n") != std::string::npos);
  CHECK(csv.find("accuracy,88.6\n") != std::string::npos);
  CHECK(csv.find("prevalence,2.8\n") != std::string::npos);

  SUBCASE("absent metrics render as empty cells") {
    const ConfusionMatrix none{0, 0, 0, 10};
    const std::string empty_csv = render_metrics_csv(metrics(none), none);
    CHECK(empty_csv.find("sensitivity,\n") != std::string::npos);
    CHECK(empty_csv.find("specificity,100.0\n") != std::string::npos);
  }
}

TEST_CASE("ci table rendering") {
  std::vector<SensitivityCI> cis;
  cis.push_back({"MEL", clopper_pearson(3, 3, 0.95)});
  const std::string csv = render_cis_csv(cis);
  CHECK(csv.find("MEL,3,3,100.0,29.2,100.0\n") != std::string::npos);
}

TEST_CASE("summary rendering keeps table order and marks absent groups") {
  std::vector<IoUSummary> summaries;
  summaries.push_back({"ConvNeXt-B", "MEL", 3, 0.58, 0.1});
  summaries.push_back({"ConvNeXt-B", "all", 3, 0.58, 0.1});
  summaries.push_back({"ViT-B/16", "MEL", 3, 0.74, 0.09});
  summaries.push_back({"ViT-B/16", "NV", 2, 0.61, std::nullopt});
  summaries.push_back({"ViT-B/16", "all", 5, 0.69, 0.12});

  const std::string csv = render_summary_csv(summaries);
  CHECK(csv.find("ViT-B/16,MEL,3,0.74,0.09\n") != std::string::npos);
  CHECK(csv.find("ViT-B/16,NV,2,0.61,\n") != std::string::npos);

  const std::string md = render_summary_markdown(summaries);
  CHECK(md.find("| Architecture | MEL | NV | Mean |") != std::string::npos);
  // ConvNeXt has no NV group: rendered as an em dash
  CHECK(md.find("| ConvNeXt-B | 0.58 ± 0.10 | — | 0.58 ± 0.10 |") != std::string::npos);
  CHECK(md.find("| ViT-B/16 | 0.74 ± 0.09 | 0.61 | 0.69 ± 0.12 |") != std::string::npos);
}

TEST_CASE("zone rendering") {
  ZoneDistribution dist;
  dist.counts = {121, 30, 25};
  dist.total = 176;
  dist.percent_tenths = {688, 170, 142};
  CHECK(render_zones_csv(dist) ==
        "zone,count,percent\n"
        "green,121,68.8\n"
        "yellow,30,17.0\n"
        "red,25,14.2\n");

  SUBCASE("empty distribution renders empty percent cells") {
    ZoneDistribution none;
    CHECK(render_zones_csv(none) ==
          "zone,count,percent\n"
          "green,0,\n"
          "yellow,0,\n"
          "red,0,\n");
  }
}
