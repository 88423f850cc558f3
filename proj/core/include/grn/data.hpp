#pragma once

// Annotated-paragraph data model, dataset/embedding readers and the
// synthetic corpus generator.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace grn {

/// Syntactic role of a noun occurrence. Declaration order is rank order.
enum class Role : std::uint8_t { S = 0, O = 1, X = 2 };

char role_char(Role r);
std::optional<Role> parse_role(const std::string& s);

struct Token {
  std::string surface;  // lowercased
  bool is_noun = false;
  std::optional<Role> role;  // only on nouns

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::vector<Token> tokens;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

enum class Split : std::uint8_t { Train, Valid, Test };

std::string split_name(Split s);
std::optional<Split> parse_split(const std::string& s);

/// Sentences are stored in gold order.
struct Paragraph {
  std::string id;
  std::vector<Sentence> sentences;
  Split split = Split::Train;

  std::size_t size() const { return sentences.size(); }
  friend bool operator==(const Paragraph&, const Paragraph&) = default;
};

std::vector<Paragraph> filter_split(const std::vector<Paragraph>& ps, Split split);

// ---------------------------------------------------------------------------
// Dataset files: one JSON record per line,
//   {"id": ..., "split": ..., "sentences": [[{"w":..,"n":..,"r":..}, ...], ...]}

enum class DatasetFormat { JsonLines };

struct LoadReport {
  std::vector<std::string> warnings;  // record kept
  std::vector<std::string> rejected;  // record dropped
};

std::vector<Paragraph> parse_dataset(std::istream& in, LoadReport* report = nullptr);
std::vector<Paragraph> load_dataset(const std::string& path,
                                    DatasetFormat format = DatasetFormat::JsonLines,
                                    LoadReport* report = nullptr);
std::string serialize_paragraph(const Paragraph& p);
void write_dataset(std::ostream& out, const std::vector<Paragraph>& ps);
void write_dataset(const std::string& path, const std::vector<Paragraph>& ps);

// ---------------------------------------------------------------------------

/// Dense word ids: 0 is padding, 1 is unknown, the rest are training words
/// meeting the frequency cutoff, in lexicographic order.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;

  Vocabulary();
  static Vocabulary build(const std::vector<Paragraph>& train, std::size_t min_count = 1);
  static Vocabulary from_words(const std::vector<std::string>& words);

  std::size_t id(const std::string& word) const;
  const std::string& word(std::size_t id) const { return words_.at(id); }
  /// All entries including the two reserved ones.
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> ids_;
};

/// Pretrained word vectors. Unseen words map to the unknown vector (the mean
/// of all loaded vectors); padding is the zero vector.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension);

  std::size_t dimension() const { return dim_; }
  void insert(const std::string& word, std::vector<double> vec);
  bool contains(const std::string& word) const { return table_.count(word) != 0; }
  const std::vector<double>& lookup(const std::string& word) const;
  const std::vector<double>& unknown() const { return unknown_; }
  const std::vector<double>& padding() const { return padding_; }
  std::size_t size() const { return table_.size(); }
  void finalize_unknown();

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> table_;
  std::vector<double> unknown_;
  std::vector<double> padding_;
};

EmbeddingTable parse_embeddings(std::istream& in, std::size_t dimension,
                                std::vector<std::string>* warnings = nullptr);
EmbeddingTable load_embeddings(const std::string& path, std::size_t dimension,
                               std::vector<std::string>* warnings = nullptr);

/// Marks lexicon members as nouns with role X. Stand-in for a real parser.
Sentence annotate_heuristic(const std::vector<std::string>& raw,
                            const std::unordered_set<std::string>& noun_lexicon);

// ---------------------------------------------------------------------------

struct SyntheticConfig {
  std::uint64_t seed = 7;
  std::size_t paragraphs = 200;
  std::pair<std::size_t, std::size_t> sentences{3, 5};
  std::pair<std::size_t, std::size_t> entities{4, 8};
  double valid_fraction = 0.0;
  double test_fraction = 0.0;
  /// Number of distinct nouns drawn on; smaller pools make word identity alone
  /// a weaker ordering cue.
  std::size_t noun_pool = 80;
  /// Prefix the first sentence with a head cue and the last with a tail cue.
  bool positional_cues = true;
};

/// Paragraphs built around an entity chain: gold sentence k introduces chain
/// entity k as object, sentence k+1 picks it up as subject. Remaining entity
/// budget is spent on extra repeated nouns with role X; every other noun
/// occurs once. Deterministic per seed.
std::vector<Paragraph> generate_synthetic(const SyntheticConfig& config);

}  // namespace grn
