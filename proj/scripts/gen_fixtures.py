#!/usr/bin/env python3
"""Regenerates the bundled synthetic fixtures under tests/fixtures/.

Produces a 20-case corpus plus a nested scripted-backend table that injects
the production failure modes the pipeline must absorb: malformed JSON in 35%
of extraction responses, overconfident weak labels, and speculative prose
around summary bullets. Deterministic by construction; run from the repo
root:

    python3 scripts/gen_fixtures.py
"""

import json
import os

FIRST = ["Daniel", "Mia", "Jordan", "Ava", "Liam", "Zoe", "Noah", "Ruby",
         "Ethan", "Isla", "Owen", "Nora", "Caleb", "Iris", "Jonah", "Lena",
         "Micah", "Tess", "Felix", "Wren"]
LAST = ["Ochoa", "Torres", "Bennett", "Kim", "Vargas", "Nakamura", "Price",
        "Sandoval", "Whitfield", "Moreau", "Okafor", "Lindqvist", "Barros",
        "Cole", "Dempsey", "Farrah", "Galanis", "Hart", "Ibarra", "Jensen"]
LOCATIONS = ["Maple Park", "Cedar Elementary", "Riverside Mall", "Oak Hollow Trail",
             "Union Station", "Birchwood Library", "Harbor Pier 4", "Sunset Campground",
             "Eastgate Plaza", "Willow Creek Bridge"]
TIMES = ["around 6 pm", "just after noon", "near dusk", "about 7:30 am",
         "late evening", "mid afternoon"]
COLORS = ["blue", "silver", "red", "black", "green"]
MODELS = [("Honda", "Civic"), ("Ford", "Focus"), ("Toyota", "Camry"),
          ("Nissan", "Altima"), ("Subaru", "Outback")]
DIRECTIONS = ["north", "south", "east", "west"]
ROUTES = ["Route 9", "I-95", "Highway 12", "County Road 5"]
MOVEMENTS = ["local", "regional", "stationary", "local", "regional"]
RISKS = ["moderate", "high", "moderate", "high", "low"]

N_CASES = 20


def case_id(i):
    return f"c{i + 1:02d}"


def build_case(i):
    name = f"{FIRST[i]} {LAST[i]}"
    age = 8 + (i * 3) % 10
    location = LOCATIONS[i % len(LOCATIONS)]
    time = TIMES[i % len(TIMES)]
    direction = DIRECTIONS[i % len(DIRECTIONS)]
    route = ROUTES[i % len(ROUTES)]
    has_vehicle = i % 2 == 0
    color, (make, model) = COLORS[i % len(COLORS)], MODELS[i % len(MODELS)]
    companion = i % 3 == 0

    narrative = (
        f"{name}, {age}, was last seen at {location} {time} wearing a {color} jacket. "
    )
    if has_vehicle:
        narrative += (
            f"A {color} {make} {model} was reported heading {direction} on {route}. "
        )
    else:
        narrative += f"Witnesses saw the child walking {direction} on foot. "
    if companion:
        narrative += "An unidentified adult companion may be involved. "
    narrative += "Family reports no prior runaway history; weather is deteriorating."

    extraction = {
        "subject_name": name,
        "subject_age": age,
        "subject_description": f"{color} jacket",
        "last_seen_location": location,
        "last_seen_time": time,
        "vehicles": [{"make": make, "model": model, "color": color, "plate": ""}]
        if has_vehicle else [],
        "companions": ["unidentified adult"] if companion else [],
        "movement_cues": [f"heading {direction} on {route}" if has_vehicle
                          else f"walking {direction} on foot"],
        "risk_factors": ["deteriorating weather", "age"],
    }

    bullets = [
        f"{name}, {age}, {color} jacket",
        f"Last seen at {location}",
        f"Seen {time}",
        (f"{color} {make} {model} heading {direction} on {route}" if has_vehicle
         else "No vehicle involved"),
        (f"Possible adult companion, moving {direction}" if companion
         else f"Moving {direction}"),
    ]

    record = {"case_id": case_id(i), "narrative": narrative,
              "metadata": {"source": "synthetic"}}
    if i % 4 == 0:
        cid = case_id(i)
        record["zones"] = [
            {"zone_id": f"{cid}-z1", "area_km2": 4.0 + i, "priority": 0.5 + (i % 5) * 0.08,
             "description": f"Search zone near {location}, dense tree cover."},
            {"zone_id": f"{cid}-z2", "area_km2": 18.0 + i, "priority": 0.35,
             "description": f"Corridor along {route} {direction}bound."},
        ]
    if i % 5 == 1:
        record["ground_truth"] = {"schema_version": "guardian-x1", "values": extraction}
    return record, extraction, bullets


def summary_text(bullets, style):
    lines = [f"- {b}" for b in bullets]
    if style == 0:  # speculative prose around the bullets
        return ("Here is my read on this case. The child was probably abducted,\n"
                + "\n".join(lines)
                + "\nHope this helps! Let me know if you need a search plan.")
    if style == 1:  # two extra speculative bullets past the contract
        return "\n".join(lines + ["- Offender likely used the highway",
                                  "- Vehicle probably abandoned"])
    return "\n".join(lines[:3])  # under-filled; normalization pads


def wrap_extraction(doc, style):
    body = json.dumps(doc)
    if style == 0:
        return body
    if style == 1:
        return f"Sure! ```json\n{body}\n``` done"
    # trailing comma inside the object, prose around it
    return "Model output: " + body[:-1] + ",} end of output"


def weak_label_text(i):
    return json.dumps({
        "movement": MOVEMENTS[i % len(MOVEMENTS)],
        "risk": RISKS[i % len(RISKS)],
        "confidence": 0.6 + (i % 4) * 0.05,
        "rationale": "derived from sighting pattern and narrative cues",
    })


def zone_label_text():
    return json.dumps({
        "movement": "local",
        "risk": "high",
        "confidence": 0.8,
        "rationale": "zone matches last-seen area and movement cues",
    })


def main():
    root = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")
    os.makedirs(root, exist_ok=True)

    corpus = []
    scripts = {backend: {} for backend in
               ["summarizer-qwen", "summarizer-llama", "extractor-qwen",
                "extractor-llama", "weak_labeler-qwen", "weak_labeler-llama",
                "referee"]}
    rl_scores = {}

    malformed_total = 0
    extraction_responses = 0

    for i in range(N_CASES):
        record, extraction, bullets = build_case(i)
        cid = record["case_id"]
        corpus.append(record)

        # Qwen replies carry the style-specific noise; Llama answers cleanly
        # when Qwen is noisy, and mirrors the style otherwise.
        scripts["summarizer-qwen"][f"summarizer:{cid}"] = [
            {"text": summary_text(bullets, i % 3)}]
        llama_summary = ("\n".join(f"- {b}" for b in bullets) if i % 3 == 0
                         else summary_text(bullets, i % 3))
        scripts["summarizer-llama"][f"summarizer:{cid}"] = [{"text": llama_summary}]

        qwen_malformed = i < 8
        llama_malformed = i < 6
        extraction_responses += 2
        malformed_total += int(qwen_malformed) + int(llama_malformed)

        scripts["extractor-qwen"][f"extractor:{cid}"] = [
            {"fault": "malformed_json"} if qwen_malformed
            else {"text": wrap_extraction(extraction, i % 3)}]
        scripts["extractor-llama"][f"extractor:{cid}"] = [
            {"fault": "malformed_json"} if llama_malformed
            else {"text": wrap_extraction(extraction, (i + 1) % 3)}]

        overconfident = i % 5 == 0
        scripts["weak_labeler-qwen"][f"weak_labeler:{cid}"] = [
            {"fault": "overconfident_label"} if overconfident
            else {"text": weak_label_text(i)}]
        scripts["weak_labeler-llama"][f"weak_labeler:{cid}"] = [
            {"text": weak_label_text(i)}]

        referee = []
        # Extract stage: one repair reply per malformed response, qwen first.
        if qwen_malformed:
            referee.append({"text": json.dumps(extraction)})
        if llama_malformed:
            referee.append({"text": json.dumps(extraction)})
        # Weak-label stage: two tie-breaks when the overconfident label clashes.
        if overconfident:
            referee.append({"text": json.dumps(
                {"choice": MOVEMENTS[i % len(MOVEMENTS)], "rationale": "narrative support"})})
            referee.append({"text": json.dumps(
                {"choice": RISKS[i % len(RISKS)], "rationale": "narrative support"})})
        if referee:
            scripts["referee"][f"referee:{cid}"] = referee

        # Zone QA scripts for zoned cases.
        if "zones" in record:
            for zone in record["zones"]:
                key = f"weak_labeler:{cid}#{zone['zone_id']}"
                scripts["weak_labeler-qwen"][key] = [{"text": zone_label_text()}]
                scripts["weak_labeler-llama"][key] = [{"text": zone_label_text()}]
            rl_scores[record["zones"][0]["zone_id"]] = 0.8

    assert malformed_total / extraction_responses >= 0.30, "fixture invariant"

    with open(os.path.join(root, "corpus20.jsonl"), "w") as fh:
        for record in corpus:
            fh.write(json.dumps(record) + "\n")
    with open(os.path.join(root, "script20.json"), "w") as fh:
        json.dump(scripts, fh, indent=1)
        fh.write("\n")
    with open(os.path.join(root, "rl_scores.json"), "w") as fh:
        json.dump(rl_scores, fh, indent=1)
        fh.write("\n")
    print(f"wrote {len(corpus)} cases; malformed extraction share "
          f"{malformed_total}/{extraction_responses}")


if __name__ == "__main__":
    main()
