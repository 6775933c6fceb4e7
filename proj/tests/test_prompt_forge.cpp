#include <random>
#include <string>

#include <gtest/gtest.h>

#include "mobench/prompt_forge.hpp"

using namespace mobench;

TEST(RenderChat, FamilyPatterns) {
    EXPECT_EQ(render_chat("llama2", "S", "P"), "[INST] <<SYS>> S <</SYS>> P [/INST]");
    EXPECT_EQ(render_chat("mistral", "S", "P"), "<s>[INST] S P [/INST]");
    EXPECT_EQ(render_chat("gemma", "S", "P"), "<start_of_turn>user\nS P<end_of_turn>\n<start_of_turn>model\n");
    EXPECT_EQ(render_chat("zephyr", "S", "P"), "<|user|>\nS\nP<|endoftext|>\n<|assistant|>\n");
    EXPECT_EQ(render_chat("phi2", "S", "P"), "S Instruct:P\nOutput");
    EXPECT_EQ(render_chat("tinyllama", "S", "P"), "<|system|>\nS</s>\n<|user|>\nP</s>\n<|assistant|>");
    EXPECT_EQ(render_chat("plain", "S", "P"), "P");
}

TEST(RenderChat, EmptySystemKeepsSeparators) {
    EXPECT_EQ(render_chat("gemma", "", "P"), "<start_of_turn>user\n P<end_of_turn>\n<start_of_turn>model\n");
    EXPECT_EQ(render_chat("llama2", "", "P"), "[INST] <<SYS>>  <</SYS>> P [/INST]");
}

TEST(RenderChat, NoEscapingOrTrimming) {
    EXPECT_EQ(render_chat("mistral", "  s\n", "\tp "), "<s>[INST]   s\n \tp  [/INST]");
}

TEST(RenderChat, SlotTextInsideInputsIsNotExpanded) {
    EXPECT_EQ(render_chat("phi2", "{prompt}", "{system}"), "{prompt} Instruct:{system}\nOutput");
}

TEST(RenderChat, UnknownFamily) { EXPECT_THROW(render_chat("gpt5", "", "P"), ConfigError); }

TEST(TemplateRegistry, ConfigCanAddFamilies) {
    TemplateRegistry reg;
    reg.add("chatml", "<|im_start|>system\n{system}<|im_end|>\n<|im_start|>user\n{prompt}<|im_end|>\n");
    EXPECT_EQ(render_chat(reg, "chatml", "S", "P"), "<|im_start|>system\nS<|im_end|>\n<|im_start|>user\nP<|im_end|>\n");
    EXPECT_THROW(reg.add("broken", "{system} only"), ConfigError);
}

TEST(RenderChat, SystemAndPromptAppearOnce) {
    std::mt19937 rng(3);
    const std::string alphabet = "abcdefgh \n";
    for (const auto& fam : TemplateRegistry().families()) {
        if (fam == "plain") continue;
        for (int i = 0; i < 20; ++i) {
            std::string s, p;
            for (int k = 0; k < 12; ++k) s += alphabet[rng() % alphabet.size()];
            for (int k = 0; k < 12; ++k) p += alphabet[rng() % alphabet.size()];
            s = "S<" + s + ">S";
            p = "P<" + p + ">P";
            auto out = render_chat(fam, s, p);
            EXPECT_EQ(out.find(s), out.rfind(s)) << fam;
            EXPECT_NE(out.find(s), std::string::npos) << fam;
            EXPECT_NE(out.find(p), std::string::npos) << fam;
            EXPECT_EQ(out.find("{system}"), std::string::npos);
            EXPECT_EQ(out.find("{prompt}"), std::string::npos);
            EXPECT_EQ(render_chat(fam, s, p), out);
        }
    }
}

namespace {

SampleRecord vqa_record(TaskKind task) {
    SampleRecord r;
    r.id = "v1";
    r.task = task;
    r.input = "What color is the bus?";
    r.image_ref = "img/1.jpg";
    r.references = {"red"};
    return r;
}

}  // namespace

TEST(RenderVqa, ShortAnswerStyles) {
    auto r = vqa_record(TaskKind::vqa_direct);
    const std::string want = "What color is the bus?\n Answer the question using a single word or phrase.";
    EXPECT_EQ(render_vqa(VqaPromptStyle::gqa, r), want);
    EXPECT_EQ(render_vqa(VqaPromptStyle::vqav2, r), want);
    EXPECT_EQ(render_vqa(VqaPromptStyle::textvqa, r), want);
    auto viz = render_vqa(VqaPromptStyle::vizwiz, r);
    EXPECT_EQ(viz,
              "What color is the bus?\n When the provided information is insufficient, respond with 'Unanswerable'. "
              "Answer the question using a single word or phrase.");
}

TEST(RenderVqa, ScienceQaLettersOptionsInOrder) {
    auto r = vqa_record(TaskKind::vqa_choice);
    r.context = "A photo of a street.";
    r.options = {"red", "blue"};
    EXPECT_EQ(render_vqa(VqaPromptStyle::scienceqa, r),
              "Context: A photo of a street.\n Question:What color is the bus?\n Options: (A) red (B) blue\n"
              " Answer with the option letter from the given choices directly.");
    r.options.clear();
    EXPECT_THROW(render_vqa(VqaPromptStyle::scienceqa, r), ConfigError);
}

TEST(RenderVqa, StyleNames) {
    EXPECT_EQ(parse_vqa_style("VQAv2"), VqaPromptStyle::vqav2);
    EXPECT_EQ(parse_vqa_style("viswiz"), VqaPromptStyle::vizwiz);
    EXPECT_EQ(parse_vqa_style("scienceqa"), VqaPromptStyle::scienceqa);
    EXPECT_THROW(parse_vqa_style("okvqa"), ConfigError);
}

TEST(TaskPrompt, ContextInputOptions) {
    SampleRecord r;
    r.id = "m";
    r.task = TaskKind::multitask_mc;
    r.input = "2+2?";
    r.options = {"3", "4"};
    EXPECT_EQ(task_prompt(r), "2+2?\n(A) 3 (B) 4");
    r.context = "Arithmetic.";
    EXPECT_EQ(task_prompt(r), "Arithmetic.\n\n2+2?\n(A) 3 (B) 4");
}
