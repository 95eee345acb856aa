// Copyright 2026 The harmkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "harmkit/synthgen.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "harmkit/evaluate.h"

namespace harmkit {

namespace {

constexpr std::string_view kStrategySlot = "{规避手段}";

const std::vector<std::string>& Pick(const AttributeTables& t, std::string_view key) {
  if (key == "genders") return t.genders;
  if (key == "ages") return t.ages;
  if (key == "occupations") return t.occupations;
  if (key == "educations") return t.educations;
  if (key == "lengths") return t.lengths;
  if (key == "platforms") return t.platforms;
  if (key == "perspectives") return t.perspectives;
  if (key == "evasions") return t.evasions;
  return t.evasion_descriptions;
}

constexpr std::string_view kTableKeys[] = {
    "genders",   "ages",         "occupations", "educations",          "lengths",
    "platforms", "perspectives", "evasions",    "evasion_descriptions"};

void ValidateTables(const AttributeTables& t) {
  for (auto key : kTableKeys) {
    if (Pick(t, key).empty()) {
      throw Error(ErrorCode::kConfig, "attribute table is empty: " + std::string(key));
    }
  }
  for (const auto& name : t.evasions) {
    if (!ParseStrategy(name)) {
      throw Error(ErrorCode::kConfig, "unknown evasion strategy in tables: " + name);
    }
  }
  if (t.evasion_descriptions.size() != 2 ||
      t.evasion_descriptions[0].find(kStrategySlot) == std::string::npos) {
    throw Error(ErrorCode::kConfig,
                "evasion_descriptions must hold the slotted template and the plain sentence");
  }
}

std::string DescribeEvasion(const AttributeTables& t, EvasionStrategy s) {
  if (s == EvasionStrategy::kNone) return t.evasion_descriptions[1];
  std::string out = t.evasion_descriptions[0];
  out.replace(out.find(kStrategySlot), kStrategySlot.size(), StrategyChineseName(s));
  return out;
}

const std::string& Draw(const std::vector<std::string>& options, Rng& rng) {
  return options[rng.UniformIndex(options.size())];
}

bool IsAscii(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char ch) {
    return static_cast<unsigned char>(ch) < 0x80;
  });
}

CandidateStatus ParseStatus(std::string_view name) {
  for (auto s : {CandidateStatus::kRaw, CandidateStatus::kFailed, CandidateStatus::kFiltered,
                 CandidateStatus::kAccepted}) {
    if (CandidateStatusName(s) == name) return s;
  }
  throw Error(ErrorCode::kValidation, "unknown candidate status: " + std::string(name));
}

Category RequireCategory(const std::string& name) {
  auto c = ParseCategoryName(name);
  if (!c) throw Error(ErrorCode::kValidation, "unknown category: " + name);
  return *c;
}

}  // namespace

AttributeTables AttributeTables::Default() {
  AttributeTables t;
  t.genders = {
      "男性", "女性", "未知"};
  t.ages = {
      "0-12", "13-17", "18-24", "25-34", "35-44", "45-54", "55-64", "65-74", "75-84",
      "85+"};
  t.occupations = {
      "程序员", "软件工程师", "系统分析师", "网络安全工程师", "数据分析师", "人工智能工程师", "硬件工程师", "数据库管理员", "前端开发",
      "后端开发", "教师", "大学教授", "辅导员", "培训师", "教研员", "教务管理", "保育员", "早教指导师", "在线教育运营",
      "教育产品经理", "医生", "护士", "药剂师", "营养师", "心理咨询师", "康复治疗师", "兽医", "急救员", "公共卫生管理",
      "医学研究员", "律师", "法官", "检察官", "公证员", "法律顾问", "公务员", "警察", "消防员", "海关人员", "边检人员",
      "工程师", "机械工程师", "电气工程师", "土木工程师", "化工工程师", "建筑设计师", "施工监理", "测绘员", "工业机器人操作",
      "质量检测员", "销售", "市场", "市场营销", "品牌策划", "广告策划", "产品经理", "客户经理", "渠道经理", "采购专员",
      "供应链管理", "设计师", "平面设计师", "室内设计师", "服装设计师", "插画师", "摄影师", "影视编导", "配音演员", "游戏原画师",
      "舞台美术", "厨师", "酒店经理", "导游", "空乘人员", "健身教练", "美容师", "美发师", "按摩技师", "客服专员", "速递员",
      "粮农", "菜农", "果农", "猪农", "渔民", "牧民", "林业员", "园艺师", "农业技术员", "水产养殖", "自媒体运营", "直播主播",
      "电竞选手", "无人机飞手", "碳排放管理员", "陪诊师", "收纳师", "研学旅行指导", "宠物殡葬师", "民宿管家", "工人", "个体经营者",
      "保安", "司机", "维修工", "电工", "木工", "搬运工", "环卫工", "门卫", "未知"};
  t.educations = {
      "文盲", "小学", "初中", "高中", "中专", "大专", "本科", "硕士", "博士", "未知"};
  t.lengths = {
      "0-5", "6-10", "11-15", "16-20", "21-25", "26-30", "31-35", "36-40", "41-45",
      "46-50", "50+"};
  t.platforms = {
      "微博", "小红书", "QQ", "微信", "抖音", "B站", "知乎", "快手", "豆瓣", "百度贴吧"};
  t.perspectives = {
      "第一人称", "第二人称", "第三人称"};
  t.evasions = {
      "拼音", "谐音词", "形似词", "emoji", "不规避"};
  t.evasion_descriptions = {
      "该文本使用关键词替换策略，使用{规避手段}来规避部分敏感词汇或内容。", "该文本为正常文本，没有使用任何规避策略或手段。"};
  return t;
}

AttributeTables AttributeTables::FromJson(const Json& json) {
  if (!json.is_object()) throw Error(ErrorCode::kConfig, "attribute tables must be an object");
  AttributeTables t;
  auto load = [&](std::string_view key, std::vector<std::string>& out) {
    auto it = json.find(std::string(key));
    if (it == json.end()) {
      throw Error(ErrorCode::kConfig, "attribute tables missing " + std::string(key));
    }
    try {
      out = it->get<std::vector<std::string>>();
    } catch (const Json::exception&) {
      throw Error(ErrorCode::kConfig, std::string(key) + " must be a list of strings");
    }
  };
  load("genders", t.genders);
  load("ages", t.ages);
  load("occupations", t.occupations);
  load("educations", t.educations);
  load("lengths", t.lengths);
  load("platforms", t.platforms);
  load("perspectives", t.perspectives);
  load("evasions", t.evasions);
  load("evasion_descriptions", t.evasion_descriptions);
  ValidateTables(t);
  return t;
}

Json AttributeTables::ToJson() const {
  Json j = Json::object();
  for (auto key : kTableKeys) j[std::string(key)] = Pick(*this, key);
  return j;
}

AttributeTables LoadAttributeTables(const std::filesystem::path& path) {
  return AttributeTables::FromJson(ParseJsonFile(path));
}

ScenarioSpec SampleScenario(Category category, const AttributeTables& tables,
                            const RuleBase& rb, uint64_t seed) {
  ValidateTables(tables);
  std::vector<const Rule*> rules;
  if (IsViolation(category)) {
    rules = rb.RulesFor(category);
    if (rules.empty()) {
      throw Error(ErrorCode::kValidation,
                  "rule base has no rules for " + std::string(EnglishName(category)),
                  Json{{"category", EnglishName(category)}});
    }
  }
  Rng rng(seed);
  ScenarioSpec spec;
  spec.category = category;
  spec.seed = seed;
  spec.persona.gender = Draw(tables.genders, rng);
  spec.persona.age = Draw(tables.ages, rng);
  spec.persona.occupation = Draw(tables.occupations, rng);
  spec.persona.education = Draw(tables.educations, rng);
  spec.text.length = Draw(tables.lengths, rng);
  spec.text.perspective = Draw(tables.perspectives, rng);
  spec.text.platform = Draw(tables.platforms, rng);
  spec.evasion.strategy = *ParseStrategy(Draw(tables.evasions, rng));
  spec.evasion.description = DescribeEvasion(tables, spec.evasion.strategy);
  if (!rules.empty()) {
    const size_t count = std::min<size_t>(1 + rng.UniformIndex(2), rules.size());
    auto picks = SampleWithoutReplacement(rules.size(), count, rng);
    std::sort(picks.begin(), picks.end());
    for (size_t p : picks) {
      spec.knowledge.rule_ids.push_back(rules[p]->id);
      if (!spec.knowledge.rule_text.empty()) spec.knowledge.rule_text += "；";
      spec.knowledge.rule_text += rules[p]->body;
    }
  }
  return spec;
}

std::vector<ScenarioSpec> SampleScenarios(Category category, size_t count,
                                          const AttributeTables& tables,
                                          const RuleBase& rb, uint64_t seed) {
  std::vector<ScenarioSpec> specs;
  specs.reserve(count);
  const std::string prefix(EnglishName(category));
  for (size_t i = 0; i < count; ++i) {
    const std::string id = prefix + "-" + std::to_string(i);
    ScenarioSpec spec = SampleScenario(category, tables, rb, DeriveSeed(seed, id));
    spec.id = id;
    specs.push_back(std::move(spec));
  }
  return specs;
}

std::string BuildGenerationPrompt(const ScenarioSpec& spec) {
  const bool violation = IsViolation(spec.category);
  std::string out;
  out += "【角色设定】\n";
  out += "你是一位经验丰富的互联网内容运营专家，擅长模仿不同群体的真实语言特征。"
         "请根据以下参数生成文本：\n\n";
  out += "【用户画像】\n";
  out += "- 性别：" + spec.persona.gender + "\n";
  out += "- 年龄：" + spec.persona.age + "\n";
  out += "- 职业：" + spec.persona.occupation + "\n";
  out += "- 学历：" + spec.persona.education + "\n\n";
  out += "【文本建模】\n";
  out += std::string("- 是否违规：") + (violation ? "违规" : "不违规") + "\n";
  out += "- 违规类别：" + std::string(ChineseLabel(spec.category)) + "\n";
  out += "- 违反规则：" + (violation ? spec.knowledge.rule_text : std::string("无")) + "\n";
  out += "- 文本长度：" + spec.text.length + "字\n";
  out += "- 叙事角度：" + spec.text.perspective + "\n";
  out += "- 发布平台：" + spec.text.platform + "\n\n";
  out += "【规避策略】\n";
  out += "- 规避手段：" + std::string(StrategyChineseName(spec.evasion.strategy)) + "\n";
  out += "- 说明：" + spec.evasion.description + "\n\n";
  out += "【生成要求】\n";
  out += "请生成符合用户画像和文本建模要求的内容。如果使用了规避策略，请注意正确应用，"
         "以确保内容尽可能真实。请直接输出生成的文本。";
  return out;
}

Json ScenarioToJson(const ScenarioSpec& spec) {
  return Json{
      {"id", spec.id},
      {"category", EnglishName(spec.category)},
      {"persona",
       {{"gender", spec.persona.gender},
        {"age", spec.persona.age},
        {"occupation", spec.persona.occupation},
        {"education", spec.persona.education}}},
      {"text",
       {{"length", spec.text.length},
        {"perspective", spec.text.perspective},
        {"platform", spec.text.platform}}},
      {"evasion",
       {{"strategy", StrategyKey(spec.evasion.strategy)},
        {"description", spec.evasion.description}}},
      {"knowledge",
       {{"rule_ids", spec.knowledge.rule_ids}, {"rule_text", spec.knowledge.rule_text}}},
      {"seed", spec.seed},
  };
}

ScenarioSpec ScenarioFromJson(const Json& json) {
  try {
    ScenarioSpec spec;
    spec.id = json.at("id").get<std::string>();
    spec.category = RequireCategory(json.at("category").get<std::string>());
    const Json& p = json.at("persona");
    spec.persona = {p.at("gender").get<std::string>(), p.at("age").get<std::string>(),
                    p.at("occupation").get<std::string>(), p.at("education").get<std::string>()};
    const Json& t = json.at("text");
    spec.text = {t.at("length").get<std::string>(), t.at("perspective").get<std::string>(),
                 t.at("platform").get<std::string>()};
    const Json& e = json.at("evasion");
    auto strategy = ParseStrategy(e.at("strategy").get<std::string>());
    if (!strategy) throw Error(ErrorCode::kValidation, "unknown evasion strategy");
    spec.evasion = {*strategy, e.at("description").get<std::string>()};
    const Json& k = json.at("knowledge");
    spec.knowledge = {k.at("rule_ids").get<std::vector<std::string>>(),
                      k.at("rule_text").get<std::string>()};
    spec.seed = json.at("seed").get<uint64_t>();
    if (IsViolation(spec.category) == spec.knowledge.rule_ids.empty()) {
      throw Error(ErrorCode::kValidation,
                  "scenario " + spec.id + " violates the rule/category invariant");
    }
    return spec;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed scenario: ") + e.what());
  }
}

std::string_view CandidateStatusName(CandidateStatus s) {
  switch (s) {
    case CandidateStatus::kRaw: return "raw";
    case CandidateStatus::kFailed: return "failed";
    case CandidateStatus::kFiltered: return "filtered";
    case CandidateStatus::kAccepted: return "accepted";
  }
  return "raw";
}

Json CandidateToJson(const Candidate& c) {
  return Json{{"id", c.id()},
              {"scenario", ScenarioToJson(c.scenario)},
              {"prompt", c.prompt},
              {"response", c.response},
              {"teacher", c.teacher},
              {"status", CandidateStatusName(c.status)},
              {"reason", c.reason}};
}

Candidate CandidateFromJson(const Json& json) {
  try {
    Candidate c;
    c.scenario = ScenarioFromJson(json.at("scenario"));
    c.prompt = json.at("prompt").get<std::string>();
    c.response = json.at("response").get<std::string>();
    c.teacher = json.value("teacher", std::string());
    c.status = ParseStatus(json.at("status").get<std::string>());
    c.reason = json.value("reason", std::string());
    return c;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed candidate: ") + e.what());
  }
}

std::string ExportCandidates(std::span<const Candidate> cands) {
  std::string out;
  for (const auto& c : cands) out += CandidateToJson(c).dump() + "\n";
  return out;
}

std::vector<Candidate> ParseCandidates(std::string_view jsonl) {
  std::vector<Candidate> out;
  size_t line_no = 0;
  for (const auto& line : SplitLines(jsonl)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::kValidation, "candidate line " + std::to_string(line_no) +
                                              " is not valid JSON");
    }
    out.push_back(CandidateFromJson(j));
  }
  return out;
}

std::vector<Candidate> GenerateCandidates(std::span<const ScenarioSpec> specs,
                                          LlmClient& client, const GenConfig& config) {
  std::vector<ChatRequest> reqs;
  reqs.reserve(specs.size());
  std::vector<Candidate> out(specs.size());
  for (size_t i = 0; i < specs.size(); ++i) {
    out[i].scenario = specs[i];
    out[i].prompt = BuildGenerationPrompt(specs[i]);
    out[i].teacher = config.model;
    ChatRequest req = UserPrompt(config.model, out[i].prompt, config.temperature);
    req.top_k = config.top_k;
    req.max_tokens = config.max_tokens;
    reqs.push_back(std::move(req));
  }
  auto results = client.CompleteBatch(reqs);
  for (size_t i = 0; i < specs.size(); ++i) {
    if (results[i].ok() && !results[i].text.empty()) {
      out[i].response = std::move(results[i].text);
    } else {
      out[i].status = CandidateStatus::kFailed;
      out[i].reason = results[i].ok() ? std::string("empty response")
                                      : std::string(LlmStatusName(results[i].status)) +
                                            (results[i].message.empty()
                                                 ? ""
                                                 : ": " + results[i].message);
    }
  }
  return out;
}

const std::vector<std::string>& DefaultRefusalKeywords() {
  static const std::vector<std::string> kKeywords = {
    "I'm sorry", "Sorry", "I am sorry", "I apologize", "As an", "As an AI", "I'm an",
    "I'm just", "As a language model", "As an Assistant", "I cannot", "I do not",
    "Hello!", "is illegal and unethical", "I'm really sorry", "OpenAI", "unethical",
    "not ethical", "illegal", "not legal", "My apologies", "but I cannot",
    "If you have any other non-malicious requests", "I'm not able to provide",
    "I am really sorry", "I cannot create", "I cannot support", "I can't provide",
    "I can't assist", "I can't", "I am not able", "I am unable", "I will not",
    "I do not engage", "illegal", "unethical", "harmful", "I am not able to", "抱歉",
    "对不起", "违规内容", "社区规定", "无法生成", "违法内容", "不好意思", "无法完成", "违反规定", "不道德", "合法", "不能生成",
    "无法提供", "平台规则", "不符合", "合规", "违反法律", "违规文本", "违反平台", "严重违规", "请勿发布", "不当内容",
    "无法协助生成", "平台安全"
  };
  return kKeywords;
}

std::vector<std::string> LoadKeywords(const std::filesystem::path& path) {
  Json j = ParseJsonFile(path);
  const Json& list = j.is_object() && j.contains("keywords") ? j["keywords"] : j;
  std::vector<std::string> out;
  try {
    out = list.get<std::vector<std::string>>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::kConfig, "keyword file must hold a list of strings");
  }
  if (out.empty() || std::any_of(out.begin(), out.end(), [](const auto& k) { return k.empty(); })) {
    throw Error(ErrorCode::kConfig, "keyword list must be non-empty with non-empty entries");
  }
  return out;
}

std::optional<std::string> FindRefusalKeyword(std::string_view response,
                                              std::span<const std::string> keywords) {
  const std::string lowered = ToLowerAscii(response);
  for (const auto& k : keywords) {
    if (k.empty()) continue;
    const bool hit = IsAscii(k) ? lowered.find(ToLowerAscii(k)) != std::string::npos
                                : response.find(k) != std::string_view::npos;
    if (hit) return k;
  }
  return std::nullopt;
}

std::vector<Candidate> FilterRefusals(std::vector<Candidate> cands,
                                      std::span<const std::string> keywords) {
  if (keywords.empty()) throw Error(ErrorCode::kValidation, "keyword list is empty");
  for (auto& c : cands) {
    if (c.status != CandidateStatus::kRaw) continue;
    if (auto k = FindRefusalKeyword(c.response, keywords)) {
      c.status = CandidateStatus::kFiltered;
      c.reason = *k;
    }
  }
  return cands;
}

std::vector<Candidate> DedupCandidates(std::vector<Candidate> cands) {
  std::array<std::set<std::string>, kNumCategories> seen;
  for (auto& c : cands) {
    if (c.status != CandidateStatus::kRaw) continue;
    if (!seen[Index(c.category())].insert(c.response).second) {
      c.status = CandidateStatus::kFiltered;
      c.reason = "duplicate";
    }
  }
  return cands;
}

std::vector<Candidate> AssembleDataset(std::span<const Candidate> cands, size_t n,
                                       uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::kValidation, "n must be positive");
  std::array<std::vector<size_t>, kNumCategories> pool;
  for (size_t i = 0; i < cands.size(); ++i) {
    if (cands[i].status == CandidateStatus::kRaw) pool[Index(cands[i].category())].push_back(i);
  }
  Json deficits = Json::array();
  std::string message = "not enough surviving candidates:";
  for (Category c : kAllCategories) {
    const size_t have = pool[Index(c)].size();
    if (have < n) {
      deficits.push_back({{"category", EnglishName(c)},
                          {"count", have},
                          {"required", n},
                          {"deficit", n - have}});
      message += " " + std::string(EnglishName(c)) + " short by " + std::to_string(n - have);
    }
  }
  if (!deficits.empty()) throw Error(ErrorCode::kShortfall, message, Json{{"deficits", deficits}});

  std::vector<Candidate> out;
  out.reserve(n * kNumCategories);
  for (Category c : kAllCategories) {
    const auto& idx = pool[Index(c)];
    Rng rng(DeriveSeed(seed, EnglishName(c)));
    auto picks = SampleWithoutReplacement(idx.size(), n, rng);
    std::sort(picks.begin(), picks.end());
    for (size_t p : picks) {
      Candidate accepted = cands[idx[p]];
      accepted.status = CandidateStatus::kAccepted;
      accepted.reason.clear();
      out.push_back(std::move(accepted));
    }
  }
  return out;
}

size_t OversampledCount(size_t n, double factor) {
  if (!(factor >= 1.0) || !std::isfinite(factor)) {
    throw Error(ErrorCode::kConfig, "oversample factor must be a finite number >= 1");
  }
  // Tolerates binary rounding, e.g. 1.3 * 30.
  const long double exact = static_cast<long double>(factor) * static_cast<long double>(n);
  const long double nearest = std::round(exact);
  if (std::fabs(exact - nearest) < 1e-9L * std::max<long double>(1.0L, exact)) {
    return static_cast<size_t>(nearest);
  }
  return static_cast<size_t>(std::ceil(exact));
}

std::vector<SftRecord> BuildSftRecords(std::span<const Candidate> accepted, const RuleBase& rb) {
  if (rb.empty()) throw Error(ErrorCode::kValidation, "rule base is empty");
  const std::string rules = RenderRules(rb);
  std::vector<SftRecord> out;
  out.reserve(accepted.size());
  for (const auto& c : accepted) {
    if (c.status != CandidateStatus::kAccepted) {
      throw Error(ErrorCode::kValidation, "candidate " + c.id() + " is not accepted");
    }
    out.push_back({BuildDetectionPromptFromRendered(rules, c.response).text,
                   std::string(ChineseLabel(c.category())), c.id()});
  }
  return out;
}

std::string SftRecordsToJsonl(std::span<const SftRecord> records) {
  std::string out;
  for (const auto& r : records) {
    OrderedJson j;
    j["input"] = r.input;
    j["target"] = r.target;
    j["provenance"] = r.provenance;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<SftRecord> ParseSftRecords(std::string_view jsonl) {
  std::vector<SftRecord> out;
  size_t line_no = 0;
  for (const auto& line : SplitLines(jsonl)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("input") || !j.contains("target") ||
        !j["input"].is_string() || !j["target"].is_string()) {
      throw Error(ErrorCode::kValidation,
                  "SFT line " + std::to_string(line_no) + " is not an {input, target} record");
    }
    out.push_back({j["input"].get<std::string>(), j["target"].get<std::string>(),
                   j.value("provenance", std::string())});
  }
  return out;
}

size_t ExportSft(std::span<const Candidate> accepted, const RuleBase& rb,
                 const std::filesystem::path& path) {
  auto records = BuildSftRecords(accepted, rb);
  WriteFile(path, SftRecordsToJsonl(records));
  return records.size();
}

}  // namespace harmkit
