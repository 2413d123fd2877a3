#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "cqkit/jsonl.hpp"

namespace cqkit {

inline constexpr std::size_t kDefaultMaxFacets = 5;
inline constexpr const char *kTemplateQuestion = "Select one to refine your search";

/// A generated clarification pane: optional question plus its facets.
struct Clarification {
  std::optional<std::string> question;
  std::vector<std::string> facets;
  /// Contract adjustments made while validating a response (truncation,
  /// dropped duplicates). Not part of the clarification itself.
  std::vector<std::string> warnings;
};

struct GeneratorRequest {
  std::string query;
  std::vector<std::string> evidence_texts;
  std::size_t max_facets = kDefaultMaxFacets;
  bool emit_question = false;

  /// Wire form: {"query","evidence","max_facets","emit_question"}.
  json to_json() const;
};

/// Anything that turns a request into facets. Implementations must be safe
/// to call concurrently.
class Generator {
public:
  virtual ~Generator() = default;
  /// Throws GeneratorError on failure.
  virtual Clarification generate(const GeneratorRequest &request) const = 0;
};

/// Frequency x document-coverage unigram/bigram extractor over the evidence.
/// Every facet it returns occurs verbatim (after normalization) in some
/// evidence text.
Clarification extractive_generate(const GeneratorRequest &request);

class ExtractiveGenerator : public Generator {
public:
  Clarification generate(const GeneratorRequest &request) const override {
    return extractive_generate(request);
  }
};

/// Enforces the Clarification contract on raw facets: normalizes, drops
/// empty and duplicate facets, truncates to max_facets. Throws
/// GeneratorError("generator returned no facets") if nothing survives.
Clarification validate_clarification(std::optional<std::string> question,
                                     const std::vector<std::string> &raw_facets,
                                     std::size_t max_facets);

/// POSTs the request to an HTTP endpoint speaking the generator wire
/// protocol. Timeouts raise a retriable GeneratorError; malformed bodies
/// raise a GeneratorError quoting the body.
Clarification remote_generate(const std::string &endpoint,
                              const GeneratorRequest &request,
                              std::chrono::milliseconds timeout);

class RemoteGenerator : public Generator {
public:
  RemoteGenerator(std::string endpoint, std::chrono::milliseconds timeout)
      : endpoint_(std::move(endpoint)), timeout_(timeout) {}
  Clarification generate(const GeneratorRequest &request) const override {
    return remote_generate(endpoint_, request, timeout_);
  }

private:
  std::string endpoint_;
  std::chrono::milliseconds timeout_;
};

/// Round-robin fusion of facet lists, deduplicated on the normalized facet
/// and capped at max_facets. The first spelling of a facet is kept. Throws
/// UsageError when every list is empty.
std::vector<std::string>
fuse_round_robin(const std::vector<std::vector<std::string>> &facet_lists,
                 std::size_t max_facets = kDefaultMaxFacets);

} // namespace cqkit
