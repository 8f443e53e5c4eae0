"""Regenerate src/daf/resources/language_profiles.json.

Profiles are character-trigram counts over a short reference text per
language, written for this repo (everyday prose, same subject across
languages so profiles differ by language, not topic).  Run from the
repo root:

    python3 tools/gen_language_profiles.py
"""

from __future__ import annotations

import json
from pathlib import Path

from daf.signals import trigram_counts

SAMPLES = {
    "en": (
        "The old library at the end of the street opens early in the morning. "
        "People from the whole town come to read newspapers, borrow books and talk "
        "quietly about the weather. On market days the square outside fills with "
        "stalls selling bread, cheese, apples and fresh fish from the coast. "
        "Children walk to school past the fountain while their parents drink "
        "coffee and plan the day ahead. In the evening the lamps along the river "
        "are lit one by one and the water carries their light under the bridges. "
        "A quick brown fox could jump over the lazy dog by the gate and nobody "
        "would look up from their tea."
    ),
    "es": (
        "La vieja biblioteca al final de la calle abre temprano por la mañana. "
        "La gente de todo el pueblo viene a leer los periódicos, pedir libros "
        "prestados y hablar en voz baja sobre el tiempo. Los días de mercado la "
        "plaza se llena de puestos que venden pan, queso, manzanas y pescado "
        "fresco de la costa. Los niños caminan a la escuela junto a la fuente "
        "mientras sus padres toman café y planean el día. Por la noche las "
        "lámparas a lo largo del río se encienden una a una y el agua lleva su "
        "luz bajo los puentes. Un rápido zorro marrón podría saltar sobre el "
        "perro perezoso junto a la puerta."
    ),
    "fr": (
        "La vieille bibliothèque au bout de la rue ouvre tôt le matin. Les gens "
        "de toute la ville viennent lire les journaux, emprunter des livres et "
        "parler doucement du temps qu'il fait. Les jours de marché, la place se "
        "remplit d'étals qui vendent du pain, du fromage, des pommes et du "
        "poisson frais de la côte. Les enfants vont à l'école en passant devant "
        "la fontaine pendant que leurs parents boivent du café et préparent la "
        "journée. Le soir, les lampes le long de la rivière s'allument une à une "
        "et l'eau porte leur lumière sous les ponts."
    ),
    "de": (
        "Die alte Bibliothek am Ende der Straße öffnet früh am Morgen. Menschen "
        "aus der ganzen Stadt kommen, um Zeitungen zu lesen, Bücher auszuleihen "
        "und leise über das Wetter zu sprechen. An Markttagen füllt sich der "
        "Platz draußen mit Ständen, die Brot, Käse, Äpfel und frischen Fisch von "
        "der Küste verkaufen. Die Kinder gehen am Brunnen vorbei zur Schule, "
        "während ihre Eltern Kaffee trinken und den Tag planen. Am Abend werden "
        "die Lampen am Fluss eine nach der anderen angezündet und das Wasser "
        "trägt ihr Licht unter die Brücken."
    ),
    "it": (
        "La vecchia biblioteca in fondo alla strada apre presto la mattina. La "
        "gente di tutta la città viene a leggere i giornali, prendere in "
        "prestito libri e parlare sottovoce del tempo. Nei giorni di mercato la "
        "piazza si riempie di bancarelle che vendono pane, formaggio, mele e "
        "pesce fresco della costa. I bambini vanno a scuola passando davanti "
        "alla fontana mentre i loro genitori bevono il caffè e organizzano la "
        "giornata. La sera le lampade lungo il fiume si accendono una ad una e "
        "l'acqua porta la loro luce sotto i ponti."
    ),
    "pt": (
        "A velha biblioteca no fim da rua abre cedo pela manhã. Pessoas de toda "
        "a cidade vêm ler os jornais, pedir livros emprestados e conversar em "
        "voz baixa sobre o tempo. Nos dias de mercado a praça se enche de "
        "barracas que vendem pão, queijo, maçãs e peixe fresco da costa. As "
        "crianças caminham para a escola passando pela fonte enquanto seus pais "
        "tomam café e planejam o dia. À noite as lâmpadas ao longo do rio se "
        "acendem uma a uma e a água leva a sua luz por baixo das pontes."
    ),
    "nl": (
        "De oude bibliotheek aan het einde van de straat gaat vroeg in de "
        "ochtend open. Mensen uit de hele stad komen kranten lezen, boeken lenen "
        "en zachtjes over het weer praten. Op marktdagen vult het plein zich met "
        "kramen die brood, kaas, appels en verse vis van de kust verkopen. De "
        "kinderen lopen langs de fontein naar school terwijl hun ouders koffie "
        "drinken en de dag plannen. In de avond gaan de lampen langs de rivier "
        "een voor een aan en het water draagt hun licht onder de bruggen door."
    ),
    "sv": (
        "Det gamla biblioteket i slutet av gatan öppnar tidigt på morgonen. "
        "Människor från hela staden kommer för att läsa tidningar, låna böcker "
        "och prata tyst om vädret. På marknadsdagar fylls torget utanför med "
        "stånd som säljer bröd, ost, äpplen och färsk fisk från kusten. Barnen "
        "går till skolan förbi fontänen medan deras föräldrar dricker kaffe och "
        "planerar dagen. På kvällen tänds lamporna längs floden en efter en och "
        "vattnet bär deras ljus under broarna."
    ),
    "da": (
        "Det gamle bibliotek for enden af gaden åbner tidligt om morgenen. Folk "
        "fra hele byen kommer for at læse aviser, låne bøger og tale stille om "
        "vejret. På markedsdage fyldes pladsen udenfor med boder, der sælger "
        "brød, ost, æbler og frisk fisk fra kysten. Børnene går i skole forbi "
        "springvandet, mens deres forældre drikker kaffe og planlægger dagen. "
        "Om aftenen tændes lamperne langs floden en efter en, og vandet bærer "
        "deres lys under broerne."
    ),
    "fi": (
        "Vanha kirjasto kadun päässä avautuu aikaisin aamulla. Ihmiset "
        "kaikkialta kaupungista tulevat lukemaan sanomalehtiä, lainaamaan "
        "kirjoja ja puhumaan hiljaa säästä. Markkinapäivinä tori täyttyy "
        "kojuista, jotka myyvät leipää, juustoa, omenoita ja tuoretta kalaa "
        "rannikolta. Lapset kävelevät kouluun suihkulähteen ohi, kun heidän "
        "vanhempansa juovat kahvia ja suunnittelevat päivää. Illalla lamput "
        "joen varrella sytytetään yksi kerrallaan ja vesi kantaa niiden valon "
        "siltojen alle."
    ),
}


def main() -> None:
    profiles = {
        lang: dict(sorted(trigram_counts(text).items()))
        for lang, text in SAMPLES.items()
    }
    out = {"version": 1, "ngram": 3, "profiles": profiles}
    target = Path(__file__).resolve().parent.parent / "src" / "daf" / "resources" / "language_profiles.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(out, ensure_ascii=False, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {target} ({len(profiles)} languages)")


if __name__ == "__main__":
    main()
