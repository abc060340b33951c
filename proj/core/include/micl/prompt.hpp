#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "micl/motion_data.hpp"

namespace micl {

// The three demonstration instructions and the prediction command. These are
// part of the wire protocol: generated scripts must contain them byte-exact
// apart from the bracketed substitutions, and the golden tests pin them.
inline constexpr std::string_view kSetupTemplate =
    "Below, please first ask me for examples of good prediction.";
inline constexpr std::string_view kPracticeQuestionTemplate =
    "Here are the observed frames of an example: [observed]. Now please give "
    "your prediction for all joint coordinates of the following frames. "
    "Respond 'Finished' once you finish.";
inline constexpr std::string_view kPracticeAnswerKeyTemplate =
    "Here are the correct answers: [future]. Please check if your predictions "
    "and the correct answers are similar. Besides, please also check if your "
    "predictions keep limbs the same length across frames (same as the "
    "correct answers).";
inline constexpr std::string_view kPredictionCommandTemplate =
    "Given the joints observed in the past [L] frames, please describe these "
    "observed frames first. Then for each of the following [J] frames, please "
    "first describe the joint movements of each joint, and then output your "
    "prediction of its coordinates.";

enum class Sender { user, assistant };
enum class TurnTag {
  setup,
  practice_question,
  practice_answer_key,
  prediction_query,
  response,
};

std::string_view to_string(Sender s);
std::string_view to_string(TurnTag t);
Sender sender_from_string(std::string_view s);
TurnTag tag_from_string(std::string_view s);

struct ChatTurn {
  Sender sender = Sender::user;
  std::string text;
  TurnTag tag = TurnTag::setup;
};

/// The ordered user-side turns of one practice-exam session: one setup
/// instruction, a (question, answer key) pair per demonstrated sample, and
/// the final prediction query.
struct DemonstrationScript {
  std::vector<ChatTurn> turns;
  std::vector<std::string> sample_order;  // P preselected ids, then N support
  int l_frames = 0;
  int j_frames = 0;
  int precision = 1;

  void validate() const;
  std::string to_jsonl() const;
  static DemonstrationScript from_jsonl(const std::string& text);
};

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structured parse failure; `span` addresses the offending region of the
/// answer so a repair prompt can quote it.
class ParseError : public std::runtime_error {
 public:
  enum class Kind {
    FewerFramesThanRequested,
    JointCountMismatch,
    NoParsableFrames,
  };

  ParseError(Kind kind, std::string message, std::size_t span_begin,
             std::size_t span_end)
      : std::runtime_error(std::move(message)),
        kind(kind),
        span_begin(span_begin),
        span_end(span_end) {}

  Kind kind;
  std::size_t span_begin = 0;
  std::size_t span_end = 0;
  int frames_found = 0;
  int frames_expected = 0;
  int frame_label = 0;
  int joints_found = 0;
  int joints_expected = 0;
};

/// One line per joint in traversal order: `<name>: (<x>, <y>, <z>)` with
/// fixed-point coordinates. Precision must lie in [0, 6].
std::string format_pose(const Pose& pose, const SkeletonSpec& skeleton,
                        int precision);

/// Frame-by-frame rendering used inside prompts: every stride-th frame
/// counted back from the last one (so the final frame always appears), each
/// introduced by a `Frame <k>:` header with k numbered from `first_label`.
std::string render_frames(const MotionSequence& seq,
                          const SkeletonSpec& skeleton, int precision,
                          int stride, int first_label = 1);

/// Number of frames render_frames emits for a sequence of `frames` frames.
int rendered_frame_count(int frames, int stride);

/// The prediction query: rendered observed frames followed by the prediction
/// command with [L] = number of rendered frames and [J] = j.
std::string build_prediction_prompt(const MotionSequence& observed, int l,
                                    int j, const SkeletonSpec& skeleton,
                                    int precision, int stride);

DemonstrationScript build_practice_script(
    const std::vector<MotionSample>& preselected,
    const std::vector<MotionSample>& support,
    const MotionSequence& test_observed, const SkeletonSpec& skeleton, int l,
    int j, int precision, int stride);

struct ParsedPrediction {
  MotionSequence sequence;
  std::vector<std::pair<std::size_t, std::size_t>> raw_spans;  // per frame
  std::vector<std::string> warnings;
};

/// Extracts j predicted frames from free text. Scans for `Frame <k>` blocks;
/// inside a block, coordinate lines are matched by joint name when a name
/// prefix is present and by traversal position otherwise; interleaved prose
/// is skipped. Returns the first j complete frames.
ParsedPrediction parse_prediction(const std::string& answer, int j,
                                  const SkeletonSpec& skeleton,
                                  double fps = 25.0);

/// Lenient variant used by the deterministic mock predictor: collects every
/// complete frame found, never throws on count.
std::vector<Pose> scan_frames(const std::string& text,
                              const SkeletonSpec& skeleton);

}  // namespace micl
