"""Regenerates the fixture corpus files from inline-markup sources.

Span markup: {I|...} {C|...} {O|...} {E|...} mark entity spans (E = effect
description words); {D|...} wraps the grouping-design sentence and may
contain entity marks. Offsets are computed against the stripped text, so
the committed JSONL files stay consistent with these sources by
construction. Run directly to rewrite corpus.jsonl, annotations.jsonl and
unlabeled.jsonl; test_fixtures.py asserts the committed files match.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from icoe import textproc

HERE = Path(__file__).parent

_OPEN_RE = re.compile(r"\{(I|C|O|E|D)\|")
_KIND_MAP = {"I": "I", "C": "C", "O": "O", "E": "EDesc"}


def parse_markup(markup: str) -> tuple[str, list[dict], tuple[int, int] | None]:
    text: list[str] = []
    spans: list[dict] = []
    design: tuple[int, int] | None = None
    stack: list[tuple[str, int]] = []
    i = 0
    while i < len(markup):
        m = _OPEN_RE.match(markup, i)
        if m:
            stack.append((m.group(1), len(text)))
            i = m.end()
            continue
        ch = markup[i]
        if ch == "}" and stack:
            mark, start = stack.pop()
            if mark == "D":
                design = (start, len(text))
            else:
                spans.append({"kind": _KIND_MAP[mark], "start": start, "end": len(text)})
            i += 1
            continue
        text.append(ch)
        i += 1
    if stack:
        raise ValueError(f"unclosed markup: {stack}")
    return "".join(text), spans, design


def design_sentence_index(body: str, design: tuple[int, int] | None) -> int | None:
    if design is None:
        return None
    nt = textproc.normalize(body)
    ns, _ = textproc.to_normalized_span(nt, design[0], design[1])
    for sentence in textproc.split_sentences(nt):
        if sentence.start <= ns < sentence.end:
            return sentence.index
    raise ValueError("design mark not inside any sentence")


def build() -> tuple[list[dict], list[dict], list[dict]]:
    corpus_rows = []
    annotation_rows = []
    for doc in DOCS:
        body, spans, design = parse_markup(doc["body"])
        corpus_rows.append({"id": doc["id"], "title": doc["title"], "body": body})
        annotation_rows.append(
            {
                "id": doc["id"],
                "spans": sorted(spans, key=lambda s: (s["start"], s["end"])),
                "design_sentence_index": design_sentence_index(body, design),
            }
        )
    unlabeled_rows = [
        {"id": doc["id"], "title": doc["title"], "body": doc["body"]} for doc in UNLABELED
    ]
    return corpus_rows, annotation_rows, unlabeled_rows


def write(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False))
            fh.write("\n")


DOCS = [
    {
        "id": "34850001",
        "title": "Hydroxychloroquine in Adults Hospitalized With COVID-19: A Randomized Controlled Trial",
        "body": (
            "Background: Hydroxychloroquine has been proposed as a treatment for coronavirus "
            "disease 2019 (COVID-19). {D|In this multicenter trial, 479 hospitalized adults were "
            "randomly assigned to receive {I|hydroxychloroquine} 400 mg twice daily for 5 days or "
            "{C|placebo}.} The primary outcome was {O|clinical status} at day 14. {O|Clinical "
            "status} at day 14 {E|did not differ} between groups (OR, 1.02; 95% CI, 0.73 to 1.42; "
            "P = .90). {O|Death} at 28 days occurred in 25 of 241 and 25 of 238 patients "
            "(p = 0.93). Hydroxychloroquine did not improve clinical outcomes in hospitalized "
            "adults."
        ),
    },
    {
        "id": "34850002",
        "title": "Remdesivir for the Treatment of COVID-19: Final Report of a Randomized Trial",
        "body": (
            "Background: Remdesivir shortens time to recovery in hospitalized patients with lower "
            "respiratory tract infection. {D|We conducted a double-blind trial in which 1062 "
            "patients were randomized 1:1 to intravenous {I|remdesivir} for 10 days or matching "
            "{C|placebo}.} {O|Time to recovery} was shorter with remdesivir (rate ratio, 1.29; "
            "95% CI, 1.12 to 1.49; P-value= 0.001). {O|Mortality} by day 29 was {E|not "
            "significantly different} (HR, 0.73; 95% CI, 0.52 to 1.03; P = .07). {O|Serious "
            "adverse events} were {E|less frequent} in the remdesivir group (p = 0.04)."
        ),
    },
    {
        "id": "34850003",
        "title": "Tocilizumab in Patients Admitted to Hospital With Severe COVID-19 Pneumonia",
        "body": (
            "{D|In this open-label platform trial, adults with severe COVID-19 pneumonia were "
            "randomly allocated to {I|tocilizumab} or {C|standard care alone}.} The primary "
            "outcome was {O|28-day mortality}. {O|28-day mortality} was 31% versus 35% (RR, 0.85; "
            "95% CI, 0.76 to 0.94; P = .003). {O|Discharge from hospital} within 28 days was more "
            "likely with tocilizumab (RR, 1.22; 95% CI, 1.12 to 1.33; P < .001). Receipt of "
            "{O|invasive mechanical ventilation} was {E|less common} with tocilizumab (p = 0.01)."
        ),
    },
    {
        "id": "34850004",
        "title": "Ivermectin for Early Treatment of Mild COVID-19: A Double-Blind Randomized Trial",
        "body": (
            "Background: The efficacy of ivermectin in preventing hospitalization among "
            "outpatients remains uncertain. {D|In this double-blind randomized trial conducted at "
            "12 sites, outpatients with early COVID-19 received {I|ivermectin} 400 µg/kg once "
            "daily for 3 days or {C|placebo}.} {O|Hospitalization} occurred in 14.7% of the "
            "ivermectin group versus 16.3% of the placebo group (OR, 0.89; 95% CI, 0.69 to 1.15; "
            "P = .38). {O|Resolution of symptoms} by day 7 was {E|similar between groups} "
            "(p = 0.53)."
        ),
    },
    {
        "id": "34850005",
        "title": "Dexamethasone in Hospitalized Patients With COVID-19",
        "body": (
            "{D|Hospitalized patients with COVID-19 were randomly assigned in a 2:1 ratio to "
            "receive oral {I|dexamethasone} 6 mg once daily for up to 10 days or {C|usual care "
            "alone}.} {O|28-day mortality} was lower in the dexamethasone group (rate ratio, "
            "0·83; 95% CI, 0·75–0·93; P < 0·001). Among patients "
            "receiving invasive mechanical ventilation at randomization, {O|death} was "
            "{E|markedly less frequent} (rate ratio, 0·64; 95% CI, 0·51–0·81; "
            "P < 0·001)."
        ),
    },
    {
        "id": "34850006",
        "title": "Favipiravir Versus Chloroquine in Patients With Moderate COVID-19",
        "body": (
            "{D|This was a multicenter randomized controlled study including 96 patients with "
            "COVID-19 who were randomly assigned into a {I|chloroquine} (CQ) group and a "
            "{C|favipiravir} group.} The primary endpoint was {O|time to viral clearance}. Median "
            "{O|time to viral clearance} was 6 days in the CQ group and 6 days in the favipiravir "
            "group (p = 0.87). One patient (2.3%) in the favipiravir group and two patients "
            "(4.2%) in the CQ group {O|died} (p = 1.00)."
        ),
    },
    {
        "id": "34850007",
        "title": "A Trial of Lopinavir-Ritonavir in Adults Hospitalized With Severe COVID-19",
        "body": (
            "Background: No antiviral therapy has proven benefit in severe COVID-19. {D|A total "
            "of 199 patients were enrolled and randomly assigned in a 1:1 ratio to "
            "{I|lopinavir-ritonavir} twice daily for 14 days or {C|standard care}.} {O|Time to "
            "clinical improvement} {E|did not differ} between groups (HR, 1.31; 95% CI, 0.95 to "
            "1.80; P = .09). {O|Viral RNA loads} over time were {E|similar between groups} "
            "(p = 0.62)."
        ),
    },
    {
        "id": "34850008",
        "title": "Therapeutic Anticoagulation With Heparin in Critically Ill Patients With COVID-19",
        "body": (
            "{D|We randomized 615 critically ill patients 1:1 to therapeutic-dose {I|heparin} or "
            "{C|usual-care prophylactic anticoagulation}.} {O|Major thrombotic events} occurred "
            "in 6.4% vs 10.4% of patients (OR, 0.59; 95% CI, 0.37 to 0.92; P = .02). {O|Survival "
            "to hospital discharge} was {E|not improved} (OR, 0.84; 95% CI, 0.64 to 1.11; "
            "P = .21). {O|Major bleeding} occurred in 3.8% vs 2.3% of patients (p = 0.27)."
        ),
    },
    {
        "id": "34850009",
        "title": "Colchicine for Community-Treated Patients With COVID-19: A Randomized Trial",
        "body": (
            "Background: Systemic inflammation contributes to severe COVID-19. {D|In this "
            "placebo-controlled trial, 4488 non-hospitalized adults were randomly assigned to "
            "receive {I|colchicine} 0.5 mg twice daily or {C|placebo} for 30 days.} The composite "
            "of {O|death or hospitalization} occurred in 4.7% and 5.8% of patients (OR, 0.79; "
            "95% CI, 0.61 to 1.03; P = .08). {O|Pneumonia} was reported with p > 0.05 for the "
            "comparison, and rates of {O|diarrhea} were {E|higher} with colchicine (p < 0.001)."
        ),
    },
    {
        "id": "34850010",
        "title": "Effect of a Single High Dose of Vitamin D3 on Hospital Length of Stay in COVID-19",
        "body": (
            "{D|Patients admitted with moderate to severe COVID-19 were allocated at random to a "
            "single oral dose of {I|vitamin D3} 200000 IU or {C|placebo}.} {O|Length of stay} was "
            "a median of 7.0 days in both groups (p = 0.59). {O|In-hospital mortality} {E|did not "
            "differ} between groups (OR, 1.49; 95% CI, 0.55 to 4.04; P = .43). Secondary "
            "endpoints including {O|ICU admission} were {E|not significant} (p ≥ 0.05)."
        ),
    },
    {
        "id": "34850011",
        "title": "Azithromycin in Addition to Standard Care in Hospitalized Adults With COVID-19",
        "body": (
            "{D|Eligible patients were assigned in a 2:1 ratio to {I|azithromycin} 500 mg once "
            "daily for 10 days plus standard care or to {C|standard care alone}.} {O|Clinical "
            "status} at day 15 was {E|similar between the two groups} (OR, 1.36; 95% CI, .94 to "
            "1.97; P = .11). {O|Viral clearance} at day 7 {E|failed to attain statistical "
            "significance} (p = 0.26)."
        ),
    },
    {
        "id": "34850012",
        "title": "Convalescent Plasma in Adults Hospitalized With Severe COVID-19 Pneumonia",
        "body": (
            "Background: Convalescent plasma has been widely used in hospitalized patients "
            "without robust evidence of benefit. {D|Hospitalized adults with severe pneumonia "
            "were randomly allocated 2:1 to high-titer {I|convalescent plasma} or {C|standard "
            "treatment}.} {O|30-day mortality} occurred in 117 of 381 patients vs 63 of 187 "
            "patients (RR, 0.92; 95% CI, 0.71 to 1.18; P = .49). {O|Clinical improvement} at day "
            "28 was {E|not different between} groups (OR, 0.87; 95% CI, 0.61 to 1.24; P = .44)."
        ),
    },
    {
        "id": "34850013",
        "title": "Outcomes of Severe COVID-19 at a Referral Center: A Comparative Report",
        "body": (
            "We report outcomes among 112 adults treated for severe COVID-19 at a single referral "
            "center. {O|ICU admission} was required in 18 patients (p = 0.31 for the comparison "
            "with historical controls). {O|Mortality} at 30 days was {E|significantly higher} "
            "among patients with diabetes (p < 0.01)."
        ),
    },
    {
        "id": "34849615",
        "title": (
            "Efficacy of Early Treatment With Favipiravir on Disease Progression Among High-Risk "
            "Patients With Coronavirus Disease 2019 (COVID-19): A Randomized, Open-Label Clinical "
            "Trial"
        ),
        "body": (
            "Background: The role of favipiravir in preventing disease progression in coronavirus "
            "disease 2019 (COVID-19) remains uncertain. We aimed to determine its effect in "
            "preventing disease progression from nonhypoxia to hypoxia among high-risk COVID-19 "
            "patients. Methods: This was an open-label, randomized clinical trial conducted at 14 "
            "public hospitals across Malaysia (February–July 2021) among 500 symptomatic, "
            "RT-PCR-confirmed COVID-19 patients, aged >50 years with ≥1 comorbidity, and "
            "hospitalized within first 7 days of illness. {D|Patients were randomized 1:1 to "
            "{I|favipiravir} plus standard care or {C|standard care alone}.} Favipiravir was "
            "administered at 1800 mg 2x/day on day 1 followed by 800 mg 2x/day until day 5. The "
            "primary endpoint was rate of {O|clinical progression from nonhypoxia to hypoxia}. "
            "Secondary outcomes included rates of {O|mechanical ventilation}, intensive care unit "
            "(ICU) admission, and {O|in-hospital mortality}. Results: Of 500 patients randomized "
            "(mean [SD] age, 62.5 [8.0] years; 258 women [51.6%]; 251 [50.2%] had COVID-19 "
            "pneumonia), 487 (97.4%) patients completed the trial. {O|Clinical progression to "
            "hypoxia} occurred in 46 (18.4%) patients on favipiravir plus standard care and 37 "
            "(14.8%) on standard care alone (OR, 1.30; 95% CI, .81–2.09; P = .28). All 3 "
            "prespecified {O|secondary endpoints} were {E|similar} between both groups. "
            "{O|Mechanical ventilation} occurred in 6 (2.4%) vs 5 (2.0%) (OR, 1.20; 95% CI, "
            ".36–4.23; P = .76). {O|ICU admission} in 13 (5.2%) vs 12 (4.8%) (OR, 1.09; "
            "95% CI, .48–2.47; P = .84), and {O|in-hospital mortality} in 5 (2.0%) vs 0 "
            "(OR, 12.54; 95% CI, .76–207.84; P = .08) patients."
        ),
    },
]

UNLABELED = [
    {
        "id": "34860001",
        "title": "Nitazoxanide for Early Treatment of Nonhospitalized Adults With COVID-19",
        "body": (
            "Background: Early antiviral therapy may prevent disease progression. In this "
            "double-blind trial, 392 outpatients were randomized 1:1 to nitazoxanide 600 mg twice "
            "daily for 5 days or placebo. Hospitalization occurred in 3.6% vs 4.1% of patients "
            "(OR, 0.87; 95% CI, 0.41 to 1.87; P = .72). Symptom resolution by day 10 was similar "
            "between groups (p = 0.88)."
        ),
    },
    {
        "id": "34860002",
        "title": "Baricitinib in Hospitalized Patients With COVID-19: A Platform Trial",
        "body": (
            "In this platform trial, 8156 hospitalized patients were randomly allocated to "
            "baricitinib 4 mg once daily for 10 days or usual care alone. 28-day mortality was "
            "lower with baricitinib (rate ratio, 0.87; 95% CI, 0.77 to 0.99; P = .03). "
            "Progression to invasive mechanical ventilation did not differ (RR, 0.89; 95% CI, "
            "0.78 to 1.02; P = .10)."
        ),
    },
    {
        "id": "34860003",
        "title": "Molnupiravir for Treatment of Nonhospitalized Adults With Mild COVID-19",
        "body": (
            "We assigned 1433 nonhospitalized adults with mild to moderate COVID-19 in a 1:1 "
            "ratio to molnupiravir 800 mg twice daily for 5 days or placebo. The risk of "
            "hospitalization or death was lower with molnupiravir (RR, 0.70; 95% CI, 0.49 to "
            "0.99; P = .04). Adverse events were similar between groups (p = 0.55)."
        ),
    },
    {
        "id": "34860004",
        "title": "Interferon Beta-1a in Hospitalized Adults With COVID-19",
        "body": (
            "Background: Interferon beta-1a has antiviral activity in vitro. Hospitalized "
            "patients were randomized to receive subcutaneous interferon beta-1a for 7 days or "
            "standard care alone. Time to clinical improvement did not differ between groups "
            "(HR, 1.10; 95% CI, 0.85 to 1.42; P = .47). In-hospital mortality occurred in 11% vs "
            "13% of patients (p = 0.65)."
        ),
    },
]


def main() -> None:
    corpus_rows, annotation_rows, unlabeled_rows = build()
    write(HERE / "corpus.jsonl", corpus_rows)
    write(HERE / "annotations.jsonl", annotation_rows)
    write(HERE / "unlabeled.jsonl", unlabeled_rows)
    print(f"wrote {len(corpus_rows)} corpus, {len(annotation_rows)} annotation, "
          f"{len(unlabeled_rows)} unlabeled rows")


if __name__ == "__main__":
    main()
