#pragma once

// Chat-template hydration per model family and dataset-specific VQA prompts.
// Escapes in the published templates are materialized here: "\n" is a real
// newline, tokens such as "</s>" stay literal text.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mobench/common.hpp"
#include "mobench/dataset_hub.hpp"

namespace mobench {

inline constexpr std::string_view kSystemSlot = "{system}";
inline constexpr std::string_view kPromptSlot = "{prompt}";

struct ChatTemplate {
    std::string family;
    std::string pattern;
};

/// Family name -> template pattern. Starts with the built-in families; run
/// configs may add or replace entries.
class TemplateRegistry {
public:
    TemplateRegistry() {
        patterns_ = {
            {"llama2", "[INST] <<SYS>> {system} <</SYS>> {prompt} [/INST]"},
            {"mistral", "<s>[INST] {system} {prompt} [/INST]"},
            {"gemma", "<start_of_turn>user\n{system} {prompt}<end_of_turn>\n<start_of_turn>model\n"},
            {"zephyr", "<|user|>\n{system}\n{prompt}<|endoftext|>\n<|assistant|>\n"},
            {"phi2", "{system} Instruct:{prompt}\nOutput"},
            {"tinyllama", "<|system|>\n{system}</s>\n<|user|>\n{prompt}</s>\n<|assistant|>"},
            // Pass-through for multimodal runners that apply their own chat format.
            {"plain", "{prompt}"},
        };
    }

    void add(std::string family, std::string pattern) {
        if (pattern.find(kPromptSlot) == std::string::npos)
            throw ConfigError("template '" + family + "' has no {prompt} slot");
        patterns_[std::move(family)] = std::move(pattern);
    }

    bool contains(std::string_view family) const { return patterns_.find(std::string(family)) != patterns_.end(); }

    const std::string& pattern(std::string_view family) const {
        auto it = patterns_.find(std::string(family));
        if (it == patterns_.end()) throw ConfigError("unknown prompt family: " + std::string(family));
        return it->second;
    }

    std::vector<std::string> families() const {
        std::vector<std::string> out;
        for (const auto& [k, _] : patterns_) out.push_back(k);
        return out;
    }

private:
    std::map<std::string, std::string> patterns_;
};

/// Single left-to-right pass over the pattern; slot markers that appear inside
/// the substituted values are never re-expanded.
inline std::string render_pattern(std::string_view pattern, std::string_view system, std::string_view prompt) {
    std::string out;
    out.reserve(pattern.size() + system.size() + prompt.size());
    std::size_t i = 0;
    while (i < pattern.size()) {
        if (pattern.compare(i, kSystemSlot.size(), kSystemSlot) == 0) {
            out += system;
            i += kSystemSlot.size();
        } else if (pattern.compare(i, kPromptSlot.size(), kPromptSlot) == 0) {
            out += prompt;
            i += kPromptSlot.size();
        } else {
            out += pattern[i++];
        }
    }
    return out;
}

inline std::string render_chat(const TemplateRegistry& registry, std::string_view family, std::string_view system,
                               std::string_view prompt) {
    return render_pattern(registry.pattern(family), system, prompt);
}

inline std::string render_chat(std::string_view family, std::string_view system, std::string_view prompt) {
    static const TemplateRegistry builtin;
    return render_chat(builtin, family, system, prompt);
}

enum class VqaPromptStyle { vqav2, vizwiz, gqa, textvqa, scienceqa };

inline VqaPromptStyle parse_vqa_style(std::string_view name) {
    auto n = detail::to_lower_ascii(name);
    if (n == "vqav2" || n == "vqa-v2") return VqaPromptStyle::vqav2;
    if (n == "vizwiz" || n == "viswiz") return VqaPromptStyle::vizwiz;
    if (n == "gqa") return VqaPromptStyle::gqa;
    if (n == "textvqa") return VqaPromptStyle::textvqa;
    if (n == "scienceqa" || n == "sqa") return VqaPromptStyle::scienceqa;
    throw ConfigError("unknown VQA prompt style: " + std::string(name));
}

inline constexpr std::string_view kShortAnswerInstruction = "Answer the question using a single word or phrase.";
inline constexpr std::string_view kUnanswerableInstruction =
    "When the provided information is insufficient, respond with 'Unanswerable'.";
inline constexpr std::string_view kOptionLetterInstruction =
    "Answer with the option letter from the given choices directly.";

inline std::string option_label(std::size_t i) {
    if (i < 26) return std::string(1, static_cast<char>('A' + i));
    return "A" + std::to_string(i);  // beyond Z; never seen in practice
}

/// "(A) first (B) second ..."
inline std::string format_options(const std::vector<std::string>& options) {
    std::string out;
    for (std::size_t i = 0; i < options.size(); ++i) {
        if (i) out += ' ';
        out += "(" + option_label(i) + ") " + options[i];
    }
    return out;
}

inline std::string render_vqa(VqaPromptStyle style, const SampleRecord& record) {
    if (!is_vqa(record.task))
        throw ConfigError("render_vqa: record '" + record.id + "' is not a VQA task");
    switch (style) {
        case VqaPromptStyle::vqav2:
        case VqaPromptStyle::gqa:
        case VqaPromptStyle::textvqa:
            return record.input + "\n " + std::string(kShortAnswerInstruction);
        case VqaPromptStyle::vizwiz:
            return record.input + "\n " + std::string(kUnanswerableInstruction) + " " +
                   std::string(kShortAnswerInstruction);
        case VqaPromptStyle::scienceqa:
            if (record.options.empty())
                throw ConfigError("render_vqa: scienceqa record '" + record.id + "' has no options");
            return "Context: " + record.context.value_or("") + "\n Question:" + record.input + "\n Options: " +
                   format_options(record.options) + "\n " + std::string(kOptionLetterInstruction);
    }
    return record.input;
}

/// Task text fed into the {prompt} slot for non-VQA tasks: optional context,
/// the input, then lettered options when the task has them.
inline std::string task_prompt(const SampleRecord& record) {
    std::string out;
    if (record.context && !record.context->empty()) out += *record.context + "\n\n";
    out += record.input;
    if (!record.options.empty()) out += "\n" + format_options(record.options);
    return out;
}

}  // namespace mobench
