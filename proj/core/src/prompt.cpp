#include "micl/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <optional>

#include <nlohmann/json.hpp>

#include "micl/text_util.hpp"

using nlohmann::json;

namespace micl {

std::string_view to_string(Sender s) {
  return s == Sender::user ? "user" : "assistant";
}

std::string_view to_string(TurnTag t) {
  switch (t) {
    case TurnTag::setup: return "setup";
    case TurnTag::practice_question: return "practice_question";
    case TurnTag::practice_answer_key: return "practice_answer_key";
    case TurnTag::prediction_query: return "prediction_query";
    case TurnTag::response: return "response";
  }
  return "response";
}

Sender sender_from_string(std::string_view s) {
  if (s == "user") return Sender::user;
  if (s == "assistant") return Sender::assistant;
  throw PromptError("unknown sender: " + std::string(s));
}

TurnTag tag_from_string(std::string_view s) {
  if (s == "setup") return TurnTag::setup;
  if (s == "practice_question") return TurnTag::practice_question;
  if (s == "practice_answer_key") return TurnTag::practice_answer_key;
  if (s == "prediction_query") return TurnTag::prediction_query;
  if (s == "response") return TurnTag::response;
  throw PromptError("unknown turn tag: " + std::string(s));
}

// ---------------------------------------------------------------------------
// Rendering

std::string format_pose(const Pose& pose, const SkeletonSpec& skeleton,
                        int precision) {
  if (precision < 0 || precision > 6)
    throw PromptError("precision must lie in [0, 6]");
  check_pose_matches(pose, skeleton);

  std::string out;
  bool first = true;
  for (int j : skeleton.traversal) {
    if (!first) out += '\n';
    first = false;
    const Vec3& c = pose.coords[j];
    out += skeleton.joints[j];
    out += ": (";
    out += format_fixed(c[0], precision);
    out += ", ";
    out += format_fixed(c[1], precision);
    out += ", ";
    out += format_fixed(c[2], precision);
    out += ')';
  }
  return out;
}

int rendered_frame_count(int frames, int stride) {
  return (frames - 1) / stride + 1;
}

std::string render_frames(const MotionSequence& seq,
                          const SkeletonSpec& skeleton, int precision,
                          int stride, int first_label) {
  if (seq.frames.empty()) throw PromptError("empty sequence");
  if (stride < 1) throw PromptError("stride must be >= 1");

  const int len = seq.frame_count();
  std::string out;
  bool first = true;
  for (int k = 1; k <= len; ++k) {
    // Strided frames are counted back from the last one, which therefore
    // always renders.
    if ((len - k) % stride != 0) continue;
    if (!first) out += '\n';
    first = false;
    out += "Frame ";
    out += std::to_string(first_label + k - 1);
    out += ":\n";
    out += format_pose(seq.frames[k - 1], skeleton, precision);
  }
  return out;
}

namespace {

std::string substitute(std::string_view tmpl, std::string_view slot,
                       const std::string& value) {
  std::string out(tmpl);
  auto pos = out.find(slot);
  if (pos == std::string::npos)
    throw PromptError("template is missing slot " + std::string(slot));
  out.replace(pos, slot.size(), value);
  return out;
}

}  // namespace

std::string build_prediction_prompt(const MotionSequence& observed, int l,
                                    int j, const SkeletonSpec& skeleton,
                                    int precision, int stride) {
  if (observed.frames.empty()) throw PromptError("empty sequence");
  if (observed.frame_count() != l)
    throw PromptError("observed sequence has " +
                      std::to_string(observed.frame_count()) +
                      " frames, expected " + std::to_string(l));
  if (j < 1) throw PromptError("j must be >= 1");

  const int rendered = rendered_frame_count(l, stride);
  std::string command =
      substitute(kPredictionCommandTemplate, "[L]", std::to_string(rendered));
  command = substitute(command, "[J]", std::to_string(j));
  return render_frames(observed, skeleton, precision, stride, 1) + "\n\n" +
         command;
}

DemonstrationScript build_practice_script(
    const std::vector<MotionSample>& preselected,
    const std::vector<MotionSample>& support,
    const MotionSequence& test_observed, const SkeletonSpec& skeleton, int l,
    int j, int precision, int stride) {
  auto check_sample = [&](const MotionSample& s) {
    if (s.observed.frame_count() != l || s.future.frame_count() != j)
      throw PromptError("sample " + s.id + " does not match L=" +
                        std::to_string(l) + ", J=" + std::to_string(j));
  };
  for (const auto& s : preselected) check_sample(s);
  for (const auto& s : support) check_sample(s);

  DemonstrationScript script;
  script.l_frames = l;
  script.j_frames = j;
  script.precision = precision;

  script.turns.push_back(
      ChatTurn{Sender::user, std::string(kSetupTemplate), TurnTag::setup});

  auto add_sample = [&](const MotionSample& s) {
    std::string observed = render_frames(s.observed, skeleton, precision, stride, 1);
    script.turns.push_back(
        ChatTurn{Sender::user,
                 substitute(kPracticeQuestionTemplate, "[observed]", observed),
                 TurnTag::practice_question});
    // Answer keys always show every future frame: they define the expected
    // output format, so no stride is applied and numbering continues at l+1.
    std::string future = render_frames(s.future, skeleton, precision, 1, l + 1);
    script.turns.push_back(
        ChatTurn{Sender::user,
                 substitute(kPracticeAnswerKeyTemplate, "[future]", future),
                 TurnTag::practice_answer_key});
    script.sample_order.push_back(s.id);
  };
  for (const auto& s : preselected) add_sample(s);
  for (const auto& s : support) add_sample(s);

  script.turns.push_back(ChatTurn{
      Sender::user,
      build_prediction_prompt(test_observed, l, j, skeleton, precision, stride),
      TurnTag::prediction_query});

  script.validate();
  return script;
}

void DemonstrationScript::validate() const {
  if (turns.size() < 2) throw PromptError("script must have at least 2 turns");
  if (turns.front().tag != TurnTag::setup)
    throw PromptError("script must start with the setup turn");
  if (turns.back().tag != TurnTag::prediction_query)
    throw PromptError("script must end with the prediction query");
  if (turns.size() != 2 + 2 * sample_order.size())
    throw PromptError("script turn count does not match sample order");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (turns[i].sender != Sender::user)
      throw PromptError("script turns must all be user turns");
    if (turns[i].text.empty()) throw PromptError("empty turn text");
    if (i >= 1 && i + 1 < turns.size()) {
      TurnTag expect = (i % 2 == 1) ? TurnTag::practice_question
                                    : TurnTag::practice_answer_key;
      if (turns[i].tag != expect)
        throw PromptError("practice turns must alternate question/answer key");
    }
  }
}

std::string DemonstrationScript::to_jsonl() const {
  json header;
  header["type"] = "demonstration_script";
  header["sample_order"] = sample_order;
  header["l_frames"] = l_frames;
  header["j_frames"] = j_frames;
  header["precision"] = precision;

  std::string out = header.dump() + "\n";
  for (const auto& t : turns) {
    json jt;
    jt["sender"] = std::string(to_string(t.sender));
    jt["tag"] = std::string(to_string(t.tag));
    jt["text"] = t.text;
    out += jt.dump();
    out += '\n';
  }
  return out;
}

DemonstrationScript DemonstrationScript::from_jsonl(const std::string& text) {
  DemonstrationScript script;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line);
    if (!saw_header) {
      if (j.value("type", "") != "demonstration_script")
        throw PromptError("script file missing header line");
      script.sample_order = j.at("sample_order").get<std::vector<std::string>>();
      script.l_frames = j.at("l_frames").get<int>();
      script.j_frames = j.at("j_frames").get<int>();
      script.precision = j.at("precision").get<int>();
      saw_header = true;
      continue;
    }
    ChatTurn t;
    t.sender = sender_from_string(j.at("sender").get<std::string>());
    t.tag = tag_from_string(j.at("tag").get<std::string>());
    t.text = j.at("text").get<std::string>();
    script.turns.push_back(std::move(t));
  }
  script.validate();
  return script;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Line {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive, without the newline
  std::string_view text;
};

std::vector<Line> split_lines(const std::string& text) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    lines.push_back(Line{pos, eol, std::string_view(text).substr(pos, eol - pos)});
    if (eol == text.size()) break;
    pos = eol + 1;
  }
  return lines;
}

bool is_decoration(char c) {
  return c == '#' || c == '*' || c == '-' || c == '>' || c == '`' ||
         c == '_' || c == ' ' || c == '\t' || c == '\r';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

// "Frame 51", "**Frame 51:**", "frame #51 -" ... -> 51
std::optional<int> match_frame_header(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && is_decoration(line[i])) ++i;
  static constexpr std::string_view kWord = "frame";
  if (line.size() - i < kWord.size()) return std::nullopt;
  for (std::size_t k = 0; k < kWord.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(line[i + k])) != kWord[k])
      return std::nullopt;
  }
  i += kWord.size();
  if (i < line.size() && std::isalnum(static_cast<unsigned char>(line[i])))
    return std::nullopt;  // "frames", "framework"
  while (i < line.size() && (line[i] == ' ' || line[i] == '#')) ++i;
  if (i >= line.size() || !std::isdigit(static_cast<unsigned char>(line[i])))
    return std::nullopt;
  int value = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
    value = value * 10 + (line[i] - '0');
    ++i;
  }
  return value;
}

// Pulls out standalone numbers; stops after max_count + 1 so callers can tell
// "exactly three" from "more than three".
std::vector<double> extract_numbers(std::string_view s, std::size_t max_count) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < s.size() && out.size() <= max_count) {
    char c = s[i];
    bool starts_number = std::isdigit(static_cast<unsigned char>(c)) ||
                         ((c == '-' || c == '+' || c == '.') && i + 1 < s.size() &&
                          std::isdigit(static_cast<unsigned char>(s[i + 1])));
    bool after_word =
        i > 0 && (std::isalnum(static_cast<unsigned char>(s[i - 1])) ||
                  s[i - 1] == '_' || s[i - 1] == '.');
    if (starts_number && !after_word) {
      const char* begin = s.data() + i;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end != begin) {
        out.push_back(v);
        i += static_cast<std::size_t>(end - begin);
        continue;
      }
    }
    ++i;
  }
  return out;
}

std::string normalize_joint_name(std::string_view raw) {
  std::string out;
  for (char c : raw) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      out += static_cast<char>(std::tolower(u));
    } else if ((c == ' ' || c == '_' || c == '-') && !out.empty() &&
               out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

bool has_letters(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    return std::isalpha(static_cast<unsigned char>(c));
  });
}

struct CoordinateLine {
  std::optional<std::string> name;  // normalized; nullopt for bare triples
  Vec3 coords{};
};

// Accepts `name: (x, y, z)` and bare `(x, y, z)` / `x, y, z` lines; anything
// else is treated as prose and skipped.
std::optional<CoordinateLine> match_coordinate_line(std::string_view line) {
  std::string_view body = trim(line);
  if (body.empty()) return std::nullopt;

  auto colon = body.find(':');
  std::string_view name_part;
  std::string_view value_part = body;
  if (colon != std::string_view::npos) {
    name_part = trim(body.substr(0, colon));
    value_part = body.substr(colon + 1);
  }

  // Prefer the parenthesized group when one is present.
  std::string_view triple_part = value_part;
  auto open = value_part.find('(');
  if (open != std::string_view::npos) {
    auto close = value_part.find(')', open);
    if (close != std::string_view::npos)
      triple_part = value_part.substr(open + 1, close - open - 1);
  } else if (has_letters(value_part)) {
    return std::nullopt;  // un-parenthesized prose
  }

  std::vector<double> numbers = extract_numbers(triple_part, 3);
  if (numbers.size() != 3) return std::nullopt;

  CoordinateLine out;
  out.coords = Vec3{numbers[0], numbers[1], numbers[2]};
  if (!name_part.empty()) {
    if (has_letters(name_part)) {
      out.name = normalize_joint_name(name_part);
    } else {
      return std::nullopt;  // "1: (x, y, z)" is not a joint line
    }
  }
  return out;
}

struct ScanResult {
  std::vector<Pose> frames;
  std::vector<int> labels;
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::vector<std::string> warnings;
  bool saw_any_coordinates = false;
};

// Core scanner shared by parse_prediction (strict=true) and scan_frames.
// In strict mode a block with some but not all joints raises
// JointCountMismatch; lenient mode skips such blocks.
ScanResult scan_blocks(const std::string& text, const SkeletonSpec& skeleton,
                       bool strict, int stop_after) {
  const int joint_count = skeleton.joint_count();
  std::vector<Line> lines = split_lines(text);

  ScanResult result;

  struct Block {
    int label = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::vector<std::optional<Vec3>> slots;  // canonical joint order
    int filled = 0;
    int overflow = 0;
  };
  std::optional<Block> block;

  auto finalize = [&](std::size_t end_offset) {
    if (!block) return;
    block->end = end_offset;
    if (block->filled > 0) result.saw_any_coordinates = true;
    if (block->filled == joint_count && block->overflow == 0) {
      Pose pose;
      pose.coords.reserve(joint_count);
      for (const auto& slot : block->slots) pose.coords.push_back(*slot);
      result.frames.push_back(std::move(pose));
      result.labels.push_back(block->label);
      result.spans.emplace_back(block->begin, block->end);
    } else if (block->filled > 0) {
      if (strict) {
        int found = block->filled + block->overflow;
        ParseError err(ParseError::Kind::JointCountMismatch,
                       "frame " + std::to_string(block->label) + " has " +
                           std::to_string(found) + " joint coordinates, expected " +
                           std::to_string(joint_count),
                       block->begin, block->end);
        err.frame_label = block->label;
        err.joints_found = found;
        err.joints_expected = joint_count;
        block.reset();
        throw err;
      }
      result.warnings.push_back("skipped incomplete frame " +
                                std::to_string(block->label));
    }
    block.reset();
  };

  for (const auto& line : lines) {
    if (auto label = match_frame_header(line.text)) {
      finalize(line.begin);
      if (stop_after > 0 &&
          static_cast<int>(result.frames.size()) >= stop_after)
        return result;
      block = Block{};
      block->label = *label;
      block->begin = line.begin;
      block->slots.assign(joint_count, std::nullopt);
      continue;
    }
    if (!block) continue;  // preamble prose before the first frame

    auto coord = match_coordinate_line(line.text);
    if (!coord) continue;

    int slot = -1;
    if (coord->name) {
      auto idx = skeleton.find_joint(*coord->name);
      if (idx) {
        slot = *idx;
      } else {
        result.warnings.push_back("unknown joint name '" + *coord->name +
                                  "' in frame " + std::to_string(block->label) +
                                  ", assigned by position");
      }
    }
    if (slot < 0) {
      // Positional fallback: the first traversal slot still open.
      for (int t : skeleton.traversal) {
        if (!block->slots[t]) {
          slot = t;
          break;
        }
      }
      if (slot < 0) {
        ++block->overflow;
        continue;
      }
    }
    if (block->slots[slot]) {
      result.warnings.push_back("duplicate coordinates for joint '" +
                                skeleton.joints[slot] + "' in frame " +
                                std::to_string(block->label));
    } else {
      ++block->filled;
    }
    block->slots[slot] = coord->coords;
  }
  finalize(text.size());
  return result;
}

}  // namespace

std::vector<Pose> scan_frames(const std::string& text,
                              const SkeletonSpec& skeleton) {
  return scan_blocks(text, skeleton, /*strict=*/false, /*stop_after=*/0).frames;
}

ParsedPrediction parse_prediction(const std::string& answer, int j,
                                  const SkeletonSpec& skeleton, double fps) {
  if (j < 1) throw PromptError("j must be >= 1");

  ScanResult scan = scan_blocks(answer, skeleton, /*strict=*/true, j);

  const int found = static_cast<int>(scan.frames.size());
  if (found < j) {
    if (found == 0 && !scan.saw_any_coordinates) {
      ParseError err(ParseError::Kind::NoParsableFrames,
                     "no parsable frames in the answer", 0, answer.size());
      err.frames_expected = j;
      throw err;
    }
    std::size_t begin = scan.spans.empty() ? 0 : scan.spans.back().second;
    ParseError err(ParseError::Kind::FewerFramesThanRequested,
                   "found " + std::to_string(found) + " complete frames, " +
                       "expected " + std::to_string(j),
                   begin, answer.size());
    err.frames_found = found;
    err.frames_expected = j;
    throw err;
  }

  ParsedPrediction pred;
  pred.sequence.fps = fps;
  pred.sequence.frames.assign(scan.frames.begin(), scan.frames.begin() + j);
  pred.raw_spans.assign(scan.spans.begin(), scan.spans.begin() + j);
  pred.warnings = std::move(scan.warnings);
  return pred;
}

}  // namespace micl
