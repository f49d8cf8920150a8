"""Writes the toy dataset and its scripted fixture. Rerun after editing PAIRS."""
import json
import pathlib

HERE = pathlib.Path(__file__).parent

# id, label, claim, evidence, [(claim phrase, evidence phrase, reasonable, fused)], verdicts by strategy
PAIRS = [
    ("t01", "SUPPORT",
     "Vitamin D supplementation reduces fracture risk in older adults.",
     "In a trial of 2,000 adults over 65, daily vitamin D lowered hip fractures by 22% compared with placebo.",
     [("Vitamin D supplementation", "daily vitamin D", True, "Participants took vitamin D daily."),
      ("reduces fracture risk", "lowered hip fractures by 22%", True, "Vitamin D lowered hip fractures by 22%."),
      ("older adults", "adults over 65", True, "The trial enrolled adults over 65.")],
     {"vanilla": "Supported", "cot": "Supported", "augfactdetect": "Supported", "direct": "Supported"}),
    ("t02", "CONTRADICT",
     "Statins increase the risk of muscle cancer.",
     "A cohort of 40,000 statin users showed no change in the incidence of muscle tumours over ten years.",
     [("Statins", "statin users", True, "The cohort consisted of statin users."),
      ("increase the risk of muscle cancer", "no change in the incidence of muscle tumours", True,
       "Statin use did not change the incidence of muscle tumours.")],
     {"vanilla": "Supported", "cot": "Contradicted", "augfactdetect": "Contradicted", "direct": "Contradicted"}),
    ("t03", "SUPPORT",
     "Aspirin lowers the recurrence of colorectal adenomas.",
     "Patients randomised to aspirin had fewer recurrent colorectal adenomas than controls.",
     [("Aspirin", "aspirin", True, "Patients were randomised to aspirin."),
      ("lowers the recurrence", "fewer recurrent colorectal adenomas", True,
       "Aspirin patients had fewer recurrent colorectal adenomas."),
      ("colorectal adenomas", "controls", False, "")],
     {"vanilla": "Supported", "cot": "Supported", "augfactdetect": "Supported", "direct": "Supported"}),
    ("t04", "NEI",
     "Green tea consumption prevents migraine.",
     "Green tea contains catechins that act as antioxidants in cell cultures.",
     [("Green tea consumption", "Green tea", True, "Green tea contains catechins.")],
     {"vanilla": "Supported", "cot": "Not Enough Info", "augfactdetect": "Not Enough Info", "direct": "Supported"}),
    ("t05", "CONTRADICT",
     "Exercise has no effect on insulin sensitivity.",
     "Twelve weeks of aerobic training improved insulin sensitivity by 30% in sedentary adults.",
     [("Exercise", "aerobic training", True, "Participants did twelve weeks of aerobic training."),
      ("no effect on insulin sensitivity", "improved insulin sensitivity by 30%", True,
       "Aerobic training improved insulin sensitivity by 30%.")],
     {"vanilla": "Contradicted", "cot": "Contradicted", "augfactdetect": "Contradicted", "direct": "Contradicted"}),
    ("t06", "SUPPORT",
     "Smoking cessation improves lung function within a year.",
     "Former smokers showed a measurable rise in FEV1 twelve months after quitting.",
     [("Smoking cessation", "quitting", True, "The participants quit smoking."),
      ("improves lung function", "rise in FEV1", True, "FEV1 rose after quitting."),
      ("within a year", "twelve months", True, "The rise was seen twelve months after quitting.")],
     {"vanilla": "Not Enough Info", "cot": "Supported", "augfactdetect": "Supported", "direct": "Supported"}),
    ("t07", "CONTRADICT",
     "Antibiotics shorten the duration of viral colds.",
     "In a placebo-controlled trial, antibiotics did not shorten cold symptoms caused by rhinovirus.",
     [("Antibiotics", "antibiotics", True, "The trial tested antibiotics."),
      ("shorten the duration", "did not shorten cold symptoms", True, "Antibiotics did not shorten cold symptoms.")],
     {"vanilla": "Contradicted", "cot": "Supported", "augfactdetect": "Contradicted", "direct": "Contradicted"}),
    ("t08", "NEI",
     "Meditation increases telomere length.",
     "Participants in the meditation group reported lower stress scores after eight weeks.",
     [("Meditation", "meditation group", True, "There was a meditation group."),
      ("increases telomere length", "lower stress scores", False, "")],
     {"vanilla": "Not Enough Info", "cot": "Not Enough Info", "augfactdetect": "Not Enough Info",
      "direct": "Not Enough Info"}),
    ("t09", "SUPPORT",
     "Folic acid before conception reduces neural tube defects.",
     "Periconceptional folic acid supplementation cut the rate of neural tube defects by more than half.",
     [("Folic acid before conception", "Periconceptional folic acid supplementation", True,
       "Folic acid was taken around conception."),
      ("reduces neural tube defects", "cut the rate of neural tube defects", True,
       "Folic acid cut the rate of neural tube defects."),
      ("reduces neural tube defects", "by more than half", True, "Folic acid cut the rate of neural tube defects.")],
     {"vanilla": "Supported", "cot": "Supported", "augfactdetect": "Supported", "direct": "Supported"}),
    ("t10", "CONTRADICT",
     "High-dose vitamin C cures sepsis.",
     "Mortality in septic patients given high-dose vitamin C did not differ from placebo.",
     [("High-dose vitamin C", "high-dose vitamin C", True, "Septic patients were given high-dose vitamin C."),
      ("cures sepsis", "Mortality did not differ from placebo", True, "Mortality did not differ from placebo.")],
     {"vanilla": "Supported", "cot": "Contradicted", "augfactdetect": "Contradicted", "direct": "Supported"}),
]


def main():
    rows, fixture = [], []
    for pid, label, claim, evidence, chains, verdicts in PAIRS:
        rows.append({"id": pid, "claim": claim, "evidence": evidence, "title": None, "label": label,
                     "dataset": "toy"})
        lines = [f"{i + 1}. {c} || {e}" for i, (c, e, _, _) in enumerate(chains)]
        fixture.append({"match": {"user_contains": ["Extract matching key phrases", "Claim: " + claim]},
                        "response": "\n".join(lines)})
        for c, e, ok, fused in chains:
            question = f"What does the evidence say about {c.lower()}?"
            fixture.append({"match": {"user_contains": ["Write one concise question", "Context: " + claim,
                                                        "Answer: " + c + "\n"]},
                            "response": "Question: " + question})
            fixture.append({"match": {"user_contains": ["reasonable answer", "Question: " + question,
                                                        "Answer: " + e + "\n"]},
                            "response": "Reasonable" if ok else "Not reasonable"})
            if ok:
                fixture.append({"match": {"user_contains": ["Rewrite the question", "Question: " + question,
                                                            "Answer: " + e + "\n"]},
                                "response": fused})
        sentences = [s.strip() for s in evidence.replace(", ", ". ").split(". ") if s.strip()]
        fixture.append({"match": {"user_contains": ["Break the evidence", "Evidence: " + evidence + "\nShort"]},
                        "response": "\n".join("- " + s.rstrip(".") + "." for s in sentences)})
        fixture.append({"match": {"user_contains": ["single line of the form", "Claim: " + claim + "\n"]},
                        "response": "Verdict: " + verdicts["vanilla"]})
        fixture.append({"match": {"user_contains": ["First explain your reasoning", "Claim: " + claim + "\n"]},
                        "response": "Explanation: The evidence is read against the claim.\nVerdict: "
                                    + verdicts["cot"]})
        first_fact = next((f for _, _, ok, f in chains if ok), "")
        fixture.append({"match": {"user_contains": ["short facts taken from", "Claim: " + claim + "\n",
                                                    "\n1. " + first_fact + "\n"]},
                        "response": "Relevant Facts: [1]\nExplanation: The first fact decides it.\nVerdict: "
                                    + verdicts["augfactdetect"]})
        fixture.append({"match": {"user_contains": ["short facts taken from", "Claim: " + claim + "\n"]},
                        "response": "Relevant Facts: [1]\nExplanation: Decided from the listed facts.\nVerdict: "
                                    + verdicts["direct"]})
    with open(HERE / "pairs.jsonl", "w") as f:
        for r in rows:
            f.write(json.dumps(r) + "\n")
    with open(HERE / "fixture.jsonl", "w") as f:
        for r in fixture:
            f.write(json.dumps(r) + "\n")


if __name__ == "__main__":
    main()
