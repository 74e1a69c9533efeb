#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace tot {

// Loads prompt templates from a directory tree of .txt files. A template id
// is the file path relative to the root without extension, e.g.
// "game24/propose". Placeholders are rendered with render(); only the names
// passed in the substitution map are replaced, so literal braces in template
// text (like an output-format example) survive untouched.
class PromptLibrary {
 public:
  explicit PromptLibrary(std::filesystem::path root);

  // Resolution order: TOT_PROMPT_DIR env var, then the compiled-in default
  // (the source tree's prompts/ directory).
  static PromptLibrary default_library();

  const std::string& get(const std::string& id) const;
  bool has(const std::string& id) const;
  std::string render(const std::string& id,
                     const std::map<std::string, std::string>& subs) const;

  static std::string substitute(const std::string& text,
                                const std::map<std::string, std::string>& subs);

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  mutable std::map<std::string, std::string> cache_;
};

} // namespace tot
