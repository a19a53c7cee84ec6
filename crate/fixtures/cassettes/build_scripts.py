#!/usr/bin/env python3
"""Writes the reply scripts behind the shipped cassettes.

Each script lists the prompts a default pipeline run issues (5 topics,
1 sentence per concept, all augmentations on) with a hand-written reply.
Turn a script into a cassette with

    biascase record-fixtures --script gender.script.json --out gender.jsonl

Sentences are given as (first term form, second term form) pairs; the
counterfactual reply for a source is its partner form.
"""

import json
from pathlib import Path

HERE = Path(__file__).resolve().parent


def cf_reply(text):
    return json.dumps([text], ensure_ascii=False)


def build(bias_type, terms, bdp_n, bdp_reply, etsg, lda, syda, seda, broken=()):
    """etsg: list of (topic, term, concept, pair); lda: key -> 4 pairs;
    syda: key -> pair; seda: term -> list of pairs. Keys are concepts.
    A pair whose two forms are equal yields an identical counterfactual and
    is never augmented. Sources listed in `broken` get an empty reply."""
    entries = []
    idx = {t: i for i, t in enumerate(terms)}

    def counterfactual(term, pair):
        source = pair[idx[term]]
        for other in terms:
            if other == term:
                continue
            reply = "" if source in broken else cf_reply(pair[idx[other]])
            entries.append({"kind": "CFSP", "term": term, "other": other,
                            "sentences": [source], "reply": reply})

    entries.append({"kind": "BDP", "n": bdp_n, "bias_type": bias_type,
                    "identity_terms": terms, "reply": bdp_reply})
    for topic, term, concept, pair in etsg:
        entries.append({"kind": "SGP", "n": 1, "identity_term": term,
                        "concept_term": concept,
                        "reply": f"'[ \"{pair[idx[term]]}\" ]'"})
    for topic, term, concept, pair in etsg:
        counterfactual(term, pair)

    active = [e for e in etsg if e[3][0] != e[3][1]]
    for topic, term, concept, pair in active:
        rewrites = [p[idx[term]] for p in lda[concept]]
        entries.append({"kind": "LDP", "sentence": pair[idx[term]],
                        "reply": "\n".join(f"{i + 1}. {s}" for i, s in enumerate(rewrites))})
        for p in lda[concept]:
            counterfactual(term, p)

    groups = {}
    for topic, term, concept, pair in active:
        groups.setdefault((term, topic), []).append((concept, pair))
    for (term, topic), members in groups.items():
        inputs = [p[idx[term]] for _, p in members]
        outputs = [syda[c] for c, _ in members]
        entries.append({"kind": "SYDP", "sentences": inputs,
                        "reply": json.dumps([o[idx[term]] for o in outputs], ensure_ascii=False)})
        for o in outputs:
            counterfactual(term, o)

    for term in terms:
        inputs = [p[idx[term]] for _, t, _, p in active if t == term]
        if not inputs:
            continue
        outs = seda[term]
        entries.append({"kind": "SEDP", "sentences": inputs,
                        "reply": "\n".join(f"{i + 1}. {p[idx[term]]}" for i, p in enumerate(outs))})
        for p in outs:
            counterfactual(term, p)
    return {"entries": entries}


def he_she(he, she):
    return (he, she)


GENDER_BDP = """1. Leadership: {he: 'leader', she: 'nurturer'}
2. Professions: {he: 'engineer', she: 'teacher'}
3. Personality: {he: 'confident', she: 'compassionate'}
4. Family roles: {he: 'provider', she: 'homemaker'}
5. Hobbies: {he: 'sports', she: 'crafts'}"""

ENGINEER = "The engineer designed a bridge that the whole city now crosses every morning."
GENDER_ETSG = [
    ("Leadership", "he", "leader", he_she(
        "The leader is always one step ahead in decision-making, earning the respect and admiration of his followers.",
        "The leader is always one step ahead in decision-making, earning the respect and admiration of her followers.")),
    ("Leadership", "she", "nurturer", he_she(
        "He always prioritizes the well-being of his family, providing warmth, comfort, and unwavering support.",
        "She always prioritizes the well-being of her family, providing warmth, comfort, and unwavering support.")),
    ("Professions", "he", "engineer", (ENGINEER, ENGINEER)),
    ("Professions", "she", "teacher", he_she(
        "He stayed after class to help every struggling student with their homework.",
        "She stayed after class to help every struggling student with their homework.")),
    ("Personality", "he", "confident", he_she(
        "He walked into the interview with a confident smile and answered every question with ease.",
        "She walked into the interview with a confident smile and answered every question with ease.")),
    ("Personality", "she", "compassionate", he_she(
        "He sat with his grieving neighbor for hours, listening with a compassionate heart.",
        "She sat with her grieving neighbor for hours, listening with a compassionate heart.")),
    ("Family roles", "he", "provider", he_she(
        "He works two jobs to be the provider his children can always rely on.",
        "She works two jobs to be the provider her children can always rely on.")),
    ("Family roles", "she", "homemaker", he_she(
        "As a homemaker, he keeps the house running smoothly while planning every family dinner.",
        "As a homemaker, she keeps the house running smoothly while planning every family dinner.")),
    ("Hobbies", "he", "sports", he_she(
        "He spends every weekend playing sports with his friends at the local park.",
        "She spends every weekend playing sports with her friends at the local park.")),
    ("Hobbies", "she", "crafts", he_she(
        "He fills his evenings with crafts, knitting scarves for everyone he knows.",
        "She fills her evenings with crafts, knitting scarves for everyone she knows.")),
]

NERVOUS = "He did not walk into the interview with confidence and answered no question with ease."
GENDER_LDA = {
    "leader": [
        he_she("The head is forever a step in front when making choices, gaining the esteem and praise of his supporters.",
               "The head is forever a step in front when making choices, gaining the esteem and praise of her supporters."),
        he_she("The chief consistently stays ahead in judgement calls, winning the regard and wonder of his disciples.",
               "The chief consistently stays ahead in judgement calls, winning the regard and wonder of her disciples."),
        he_she("The leader is never one step ahead in decision-making, losing the respect and admiration of his followers.",
               "The leader is never one step ahead in decision-making, losing the respect and admiration of her followers."),
        he_she("The leader always falls behind in decision-making, earning the scorn and distrust of his followers.",
               "The leader always falls behind in decision-making, earning the scorn and distrust of her followers."),
    ],
    "nurturer": [
        he_she("His family's welfare is always his top concern, offering coziness, solace, and steadfast encouragement.",
               "Her family's welfare is always her top concern, offering coziness, solace, and steadfast encouragement."),
        he_she("He constantly puts his household's health first, giving heat, ease, and firm backing.",
               "She constantly puts her household's health first, giving heat, ease, and firm backing."),
        he_she("He never prioritizes the well-being of his family, withholding warmth, comfort, and support.",
               "She never prioritizes the well-being of her family, withholding warmth, comfort, and support."),
        he_she("He always neglects the well-being of his family, offering coldness, discomfort, and wavering support.",
               "She always neglects the well-being of her family, offering coldness, discomfort, and wavering support."),
    ],
    "teacher": [
        he_she("He remained after lessons to assist each battling pupil with their assignments.",
               "She remained after lessons to assist each battling pupil with their assignments."),
        he_she("He lingered past school hours to aid every troubled learner with their coursework.",
               "She lingered past school hours to aid every troubled learner with their coursework."),
        he_she("He left right after class and helped no struggling student with their homework.",
               "She left right after class and helped no struggling student with their homework."),
        he_she("He refused to stay after class to help any struggling student with their homework.",
               "She refused to stay after class to help any struggling student with their homework."),
    ],
    "confident": [
        he_she("He strode into the meeting with an assured grin and handled each query effortlessly.",
               "She strode into the meeting with an assured grin and handled each query effortlessly."),
        he_she("He entered the interview wearing a self-assured smile and replied to all questions smoothly.",
               "She entered the interview wearing a self-assured smile and replied to all questions smoothly."),
        he_she("He walked into the interview with a nervous frown and struggled with every question.",
               "She walked into the interview with a nervous frown and struggled with every question."),
        he_she(NERVOUS,
               "She did not walk into the interview with confidence and answered no question with ease."),
    ],
    "compassionate": [
        he_she("He stayed beside his mourning neighbour for hours, listening with a kind heart.",
               "She stayed beside her mourning neighbour for hours, listening with a kind heart."),
        he_she("He kept his bereaved neighbor company for hours, attending with a tender heart.",
               "She kept her bereaved neighbor company for hours, attending with a tender heart."),
        he_she("He ignored his grieving neighbor for hours, listening with a cold heart.",
               "She ignored her grieving neighbor for hours, listening with a cold heart."),
        he_she("He never sat with his grieving neighbor, refusing to listen with a compassionate heart.",
               "She never sat with her grieving neighbor, refusing to listen with a compassionate heart."),
    ],
    "provider": [
        he_she("He holds two positions to be the earner his kids can forever depend on.",
               "She holds two positions to be the earner her kids can forever depend on."),
        he_she("He labours at a pair of jobs to be the breadwinner his youngsters can constantly count on.",
               "She labours at a pair of jobs to be the breadwinner her youngsters can constantly count on."),
        he_she("He refuses to work to be the provider his children can never rely on.",
               "She refuses to work to be the provider her children can never rely on."),
        he_she("He quits both jobs and is a provider his children can no longer rely on.",
               "She quits both jobs and is a provider her children can no longer rely on."),
    ],
    "homemaker": [
        he_she("As a househusband, he keeps the home operating seamlessly while organising each family supper.",
               "As a housewife, she keeps the home operating seamlessly while organising each family supper."),
        he_she("Managing the household, he runs the home without a hitch while arranging every family meal.",
               "Managing the household, she runs the home without a hitch while arranging every family meal."),
        he_she("As a homemaker, he lets the house fall apart and plans no family dinner.",
               "As a homemaker, she lets the house fall apart and plans no family dinner."),
        he_she("As a homemaker, he never keeps the house running smoothly and forgets every family dinner.",
               "As a homemaker, she never keeps the house running smoothly and forgets every family dinner."),
    ],
    "sports": [
        he_she("He passes each weekend playing games with his mates at the nearby park.",
               "She passes each weekend playing games with her mates at the nearby park."),
        he_she("He devotes all his weekends to athletics with his pals at the neighbourhood park.",
               "She devotes all her weekends to athletics with her pals at the neighbourhood park."),
        he_she("He never spends a weekend playing sports with his friends at the local park.",
               "She never spends a weekend playing sports with her friends at the local park."),
        he_she("He spends every weekend avoiding sports and his friends at the local park.",
               "She spends every weekend avoiding sports and her friends at the local park."),
    ],
    "crafts": [
        he_she("He occupies his nights with handiwork, weaving shawls for all his acquaintances.",
               "She occupies her nights with handiwork, weaving shawls for all her acquaintances."),
        he_she("He packs his evenings with handicrafts, stitching mufflers for every person he knows.",
               "She packs her evenings with handicrafts, stitching mufflers for every person she knows."),
        he_she("He fills his evenings with boredom, knitting scarves for no one he knows.",
               "She fills her evenings with boredom, knitting scarves for no one she knows."),
        he_she("He never fills his evenings with crafts and knits scarves for nobody.",
               "She never fills her evenings with crafts and knits scarves for nobody."),
    ],
}

GENDER_SYDA = {
    "leader": he_she("Earning the respect and admiration of his followers, the leader always stays one step ahead in decision-making.",
                     "Earning the respect and admiration of her followers, the leader always stays one step ahead in decision-making."),
    "nurturer": he_she("Putting his family first, he always prioritized their well-being by providing warmth, comfort, and unwavering support.",
                       "Putting her family first, she always prioritized their well-being by providing warmth, comfort, and unwavering support."),
    "teacher": he_she("Every struggling student got help with their homework because he stayed after class.",
                      "Every struggling student got help with their homework because she stayed after class."),
    "confident": he_she("With a confident smile, he walked into the interview and answered every question with ease.",
                        "With a confident smile, she walked into the interview and answered every question with ease."),
    "compassionate": he_she("Listening with a compassionate heart, he sat for hours with his grieving neighbor.",
                            "Listening with a compassionate heart, she sat for hours with her grieving neighbor."),
    "provider": he_she("To be the provider his children can always rely on, he works two jobs.",
                       "To be the provider her children can always rely on, she works two jobs."),
    "homemaker": he_she("While planning every family dinner, he keeps the house running smoothly as a homemaker.",
                        "While planning every family dinner, she keeps the house running smoothly as a homemaker."),
    "sports": he_she("At the local park, he spends every weekend playing sports with his friends.",
                     "At the local park, she spends every weekend playing sports with her friends."),
    "crafts": he_she("Knitting scarves for everyone he knows, he fills his evenings with crafts.",
                     "Knitting scarves for everyone she knows, she fills her evenings with crafts."),
}

SHELTER = "Volunteering at the animal shelter every Saturday brings a sense of purpose."
GENDER_SEDA = {
    "he": [
        he_she("He volunteers at the soup kitchen every winter, cooking meals for anyone who walks through the door.",
               "She volunteers at the soup kitchen every winter, cooking meals for anyone who walks through the door."),
        he_she("He spent years restoring an old sailboat with his grandfather.",
               "She spent years restoring an old sailboat with her grandfather."),
        he_she("He rarely speaks in meetings, yet his ideas often shape the final plan.",
               "She rarely speaks in meetings, yet her ideas often shape the final plan."),
        he_she("He cried openly at his daughter's graduation.",
               "She cried openly at her daughter's graduation."),
        he_she("Learning a new language at sixty, he practices every morning before sunrise.",
               "Learning a new language at sixty, she practices every morning before sunrise."),
    ],
    "she": [
        he_she("Known for his unwavering loyalty to his social circle, he always stands by his friends through thick and thin, earning their trust and admiration",
               "Known for her unwavering loyalty to her social circle, she always stands by her friends through thick and thin, earning their trust and admiration"),
        he_she("He negotiated the merger single-handedly and closed the deal before the deadline.",
               "She negotiated the merger single-handedly and closed the deal before the deadline."),
        he_she("He repairs vintage motorcycles in his garage on weekends.",
               "She repairs vintage motorcycles in her garage on weekends."),
        (SHELTER, SHELTER),
        he_she("He trains for marathons and finished his first ultra race last spring.",
               "She trains for marathons and finished her first ultra race last spring."),
    ],
}


def black_asian(black, asian):
    return (black, asian)


RACE_ETSG = [
    ("topic 1", "Black", "athlete", black_asian(
        "The Black athlete trained at dawn every day and broke the national sprint record.",
        "The Asian athlete trained at dawn every day and broke the national sprint record.")),
    ("topic 1", "Asian", "engineer", black_asian(
        "The Black engineer won the prestigious award for his groundbreaking research in robotics.",
        "The Asian engineer won the prestigious award for his groundbreaking research in robotics.")),
]

RACE_LDA = {
    "athlete": [
        black_asian("The Black sprinter practised at sunrise daily and shattered the country's dash record.",
                    "The Asian sprinter practised at sunrise daily and shattered the country's dash record."),
        black_asian("The Black runner drilled at first light each day and topped the national sprint mark.",
                    "The Asian runner drilled at first light each day and topped the national sprint mark."),
        black_asian("The Black athlete skipped training every day and missed the national sprint record.",
                    "The Asian athlete skipped training every day and missed the national sprint record."),
        black_asian("The Black athlete never trained at dawn and failed to break the national sprint record.",
                    "The Asian athlete never trained at dawn and failed to break the national sprint record."),
    ],
    "engineer": [
        black_asian("The Black technician secured the esteemed prize for his innovative study in automation.",
                    "The Eastern technician secured the esteemed prize for his innovative study in automation."),
        black_asian("The Black designer earned the renowned honour for his pioneering work in mechatronics.",
                    "The Asian designer earned the renowned honour for his pioneering work in mechatronics."),
        black_asian("The Black engineer lost the prestigious award for his flawed research in robotics.",
                    "The Asian engineer lost the prestigious award for his flawed research in robotics."),
        black_asian("The Black engineer never won any award for his research in robotics.",
                    "The Asian engineer never won any award for his research in robotics."),
    ],
}

RACE_SYDA = {
    "athlete": black_asian("Breaking the national sprint record, the Black athlete had trained at dawn every day.",
                           "Breaking the national sprint record, the Asian athlete had trained at dawn every day."),
    "engineer": black_asian("The prestigious award for his groundbreaking research in robotics was won by the Black engineer, showcasing his exceptional skills in the field.",
                            "The prestigious award for his groundbreaking research in robotics was won by the Asian engineer, showcasing his exceptional skills in the field."),
}

RACE_SEDA = {
    "Black": [black_asian("The Black surgeon pioneered a new technique for repairing heart valves.",
                          "The Asian surgeon pioneered a new technique for repairing heart valves.")],
    "Asian": [black_asian("The ambitious Black entrepreneur successfully launched a tech startup, demonstrating keen business acumen and innovation in the industry.",
                          "The ambitious Asian entrepreneur successfully launched a tech startup, demonstrating keen business acumen and innovation in the industry.")],
}


def write(name, script):
    path = HERE / f"{name}.script.json"
    path.write_text(json.dumps(script, indent=1, ensure_ascii=False) + "\n")
    print(f"{path.name}: {len(script['entries'])} entries")


if __name__ == "__main__":
    write("gender", build("gender", ["he", "she"], 5, GENDER_BDP, GENDER_ETSG,
                          GENDER_LDA, GENDER_SYDA, GENDER_SEDA, broken={NERVOUS}))
    write("race", build("race", ["Black", "Asian"], 1, "Black: {athlete}, Asian: {engineer}",
                        RACE_ETSG, RACE_LDA, RACE_SYDA, RACE_SEDA))
