#!/usr/bin/env python3
"""Regenerate the bundled lexicon TSVs under src/fuselab/data/.

The word-frequency list is a curated rank ordering of common English
words (function words first, then high-band content words, then lower
bands) with Zipf-shaped counts assigned by rank, plus programmatic
inflections for listed verbs and nouns at a fraction of the stem's
count. Counts only need to be *relatively* sane: hashtag segmentation
and typo repair compare products and ranks, never absolute values.
"""

import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "src" / "fuselab" / "data"

# rank bands, most frequent first; order within a band is the rank order
BAND1 = """
the of and a to in is you that it he was for on are as with his they i at be
this have from or one had by word but not what all were we when your can said
there use an each which she do how their if will up other about out many then
them these so some her would make like him into time has look two more write
go see number no way could people my than first water been call who its now
find long down day did get come made may part over new sound take only little
work know place year live me back give most very after thing our just name
good man think say great where help through much before line right too mean
old any same tell boy follow came want show also around form three small set
put end does another well large must big even such because turn here why ask
went men read need land different home us move try kind hand picture again
change off play spell air away animal house point page letter mother answer
found study still learn should world high every near add food between own
below country plant last school father keep tree never start city earth eye
light thought head under story saw left dont few while along might close
something seem next hard open example begin life always those both paper
together got group often run
""".split()

BAND2 = """
important until children side feet car mile night walk white sea began grow
took river four carry state once book hear stop without second later miss
idea enough eat face watch far really almost let above girl sometimes
mountain cut young talk soon list song being leave family body music color
stand sun questions fish area mark dog horse birds problem complete room
knew since ever piece told usually didnt friends easy heard order red door
sure become top ship across today during short better best however low hours
black products happened whole measure remember early waves reached listen
wind rock space covered fast several hold himself toward five step morning
passed vowel true hundred against pattern numeral table north slowly money
map farm pulled draw voice seen cold cried plan notice south sing war ground
fall king town unit figure certain field travel wood fire upon done english
road half ten fly gave box finally wait correct oh quickly person became
shown minutes strong verb stars front feel fact inches street decided
contain course surface produce building ocean class note nothing rest
carefully scientists inside wheels stay green known island week less machine
base ago stood plane system behind ran round boat game force brought
understand warm common bring explain dry though language shape deep
thousands yes clear equation yet government filled heat full hot check
object am rule among noun power cannot able six size dark ball material
special heavy fine pair circle include built
""".split()

BAND3 = """
cool love hate wow hello brother sister friend forever happy sad funny crazy
nice beautiful ugly smart stupid awesome amazing great news today tomorrow
yesterday morning evening weekend party photo video phone internet online
twitter tweet post share follow like comment message chat email web site
blog link page profile status update trend viral meme lol omg thanks please
sorry welcome bye goodbye yeah yep nope okay ok alright maybe definitely
probably totally literally actually seriously honestly basically exactly
finally suddenly quietly loudly quickly slowly badly sadly gladly truly
really broccoli pizza coffee tea water juice milk bread cheese chicken rice
salad fruit apple banana orange grape lemon cake cookie chocolate candy
sugar salt dinner lunch breakfast snack meal kitchen table chair sofa bed
window wall floor roof garden yard park road street bridge train bus bike
plane airport station hotel beach ocean lake forest mountain valley desert
snow rain storm cloud sunny windy summer winter spring autumn season
weather alice bob carol david emma frank grace henry ivy jack kate liam mia
noah olivia peter quinn rose sam tina uma victor wendy xavier yara zoe cat
dog bird fish mouse lion tiger bear wolf fox deer rabbit horse sheep cow
pig duck goat monkey elephant chase catch throw jump climb push pull carry
drag lift drop pick grab hug kiss smile laugh cry shout whisper scream sing
dance drive ride swim sail march sleep dream wake rest relax enjoy visit
travel explore discover learn teach study practice train exercise cook bake
clean wash paint draw build fix break repair open close lock push press
click type scroll swipe search browse download upload install delete save
print copy paste cut edit record film watch listen speak talk discuss argue
agree disagree decide choose prefer suggest recommend promise refuse accept
reject offer invite join leave arrive depart return stay wait hurry rush
walk sprint crawl hide seek find lose win fail succeed try attempt achieve
complete finish begin continue pause stop quit start restart school college
work office job boss worker teacher student doctor nurse artist singer
writer player coach team club group crowd family parent child baby adult
teen kid man woman boy girl person human animal nature world earth planet
star moon sky sun space universe science math history art music sport
soccer football tennis golf hockey baseball basketball volleyball running
swimming cycling yoga gym health medicine hospital dentist pharmacy
""".split()

# verbs whose inflections get generated alongside the stem
VERBS_FOR_INFLECTION = """
ask call change chase check clean climb close cook cry dance enjoy
follow hate help jump laugh learn like listen live look love miss move
need open paint pick plan play pull push rain reach remember rest save
seem share show smile sound stay stop study talk thank travel try turn
use visit wait walk want wash watch whisper wish work
""".split()

NOUNS_FOR_PLURAL = """
cat dog bird ball game girl boy friend brother sister photo video phone
tweet post comment message car book song story idea word name day year
city town road street house school job team player star cloud storm tree
flower river lake mountain beach party meal drink cake cookie apple
""".split()

EMOTICONS = [
    (":)", "smile"), (":-)", "smile"), ("(:", "smile"), ("=)", "smile"),
    (":(", "sad"), (":-(", "sad"), ("):", "sad"), ("='(", "cry"), (":'(", "cry"),
    (";)", "wink"), (";-)", "wink"),
    (":D", "laugh"), (":-D", "laugh"), ("xD", "laugh"), ("XD", "laugh"), ("=D", "laugh"),
    (":P", "tongue"), (":-P", "tongue"), (":p", "tongue"),
    (":O", "surprise"), (":-O", "surprise"), (":o", "surprise"),
    ("<3", "heart"), ("</3", "brokenheart"),
    (":/", "annoyed"), (":-/", "annoyed"), (":|", "neutral"), (":-|", "neutral"),
    (":*", "kiss"), (";P", "tonguewink"),
]

TYPOS = [
    ("borther", "brother"), ("teh", "the"), ("adn", "and"), ("waht", "what"),
    ("taht", "that"), ("thier", "their"), ("recieve", "receive"),
    ("beleive", "believe"), ("freind", "friend"), ("wierd", "weird"),
    ("definately", "definitely"), ("seperate", "separate"),
    ("becuase", "because"), ("occured", "occurred"), ("untill", "until"),
    ("tommorow", "tomorrow"), ("alot", "a lot"),
]

POS_CLOSED = {
    "DET": "the a an this that these those every each some any no all both "
           "another such many few several most more".split(),
    "PRON": "i you he she it we they me him her us them who whom my your his "
            "its our their mine yours hers ours theirs myself yourself "
            "himself herself itself ourselves themselves someone anyone "
            "everyone nobody something anything everything nothing".split(),
    "PREP": "of in to for with on at by from about as into over after under "
            "between through during before against among around without "
            "within along across behind beyond near off above below up down "
            "out inside outside onto upon toward towards".split(),
    "CONJ": "and or but nor yet because although while if when than since "
            "unless until whereas".split(),
    "AUX": "be is am are was were been being have has had having do does did "
           "will would can could shall should may might must wont cant".split(),
}

POS_VERBS = """
say said go went goes gone get got gets make made makes know knew known
think thought take took taken see saw seen come came want wants wanted use
used find found give gave given tell told work works worked call called try
tried tries ask asked need needed feel felt seem seemed leave left put mean
meant keep kept let begin began begun help helped talk talked turn turned
start started show showed shown hear heard play played run ran move moved
like liked live lived believe believed hold held bring brought happen
happened write wrote written sit sat stand stood lose lost pay paid meet met
include included continue continued set learn learned learns change changed
lead led understand understood watch watched follow followed stop stopped
create created speak spoke spoken read allow allowed add added spend spent
grow grew grown open opened walk walked win won offer offered remember
remembered love loved loves consider considered appear appeared buy bought
wait waited serve served die died send sent expect expected build built stay
stayed fall fell fallen cut reach reached kill killed remain remained chase
chased chases hate hates hated eat ate eaten drink drank drunk sleep slept
laugh laughed cry cried smile smiled jump jumped climb climbed push pushed
pull pulled throw threw thrown catch caught carry carried sing sang sung
dance danced drive drove driven ride rode ridden fly flew flown swim swam
swum miss missed wish wished thank thanked share shared post posted tweet
tweeted click clicked type typed search searched browse browsed save saved
delete deleted check checked plan planned rain rained snow snowed
""".split()

POS_ADJ = """
good new first last long great little own other old right big high
different small large next early young important public bad same able cool
happy sad funny nice beautiful ugly fast slow hot cold warm red blue green
black white yellow brown pink purple quick strong weak rich poor full empty
easy hard soft loud quiet clean dirty smart stupid awesome amazing crazy
wild calm free busy tired hungry thirsty angry scared brave proud shy kind
mean fair wrong true false real fake cheap expensive heavy light deep
shallow wide narrow thick thin tall short sweet sour bitter fresh stale
""".split()

POS_ADV = """
now then there here very too also just only even still never always often
again soon quickly slowly badly sadly gladly truly really quite almost away
back well today tomorrow yesterday maybe definitely probably totally
literally actually seriously honestly basically exactly finally suddenly
quietly loudly together everywhere somewhere nowhere anywhere
""".split()


def zipf_counts(ranked):
    base = 60_000_000
    counts = {}
    for rank, word in enumerate(ranked, start=1):
        if word not in counts:
            counts[word] = int(base / rank)
    return counts


def inflections(stem):
    out = []
    if stem.endswith(("s", "x", "z", "ch", "sh")):
        out.append(stem + "es")
    elif stem.endswith("y") and stem[-2] not in "aeiou":
        out.append(stem[:-1] + "ies")
        out.append(stem[:-1] + "ied")
    else:
        out.append(stem + "s")
    if stem.endswith("e"):
        out.append(stem + "d")
        out.append(stem[:-1] + "ing")
    elif not stem.endswith("y"):
        out.append(stem + "ed")
        out.append(stem + "ing")
    else:
        out.append(stem + "ing")
    return out


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    ranked = BAND1 + BAND2 + BAND3
    counts = zipf_counts(ranked)
    for stem in VERBS_FOR_INFLECTION:
        stem_count = counts.get(stem, 40_000)
        counts.setdefault(stem, stem_count)
        for k, form in enumerate(inflections(stem), start=2):
            counts.setdefault(form, max(1000, stem_count // (2 * k)))
    for stem in NOUNS_FOR_PLURAL:
        stem_count = counts.get(stem, 40_000)
        counts.setdefault(stem, stem_count)
        plural = stem + ("es" if stem.endswith(("s", "x", "z", "ch", "sh", "o")) else "s")
        counts.setdefault(plural, max(1000, stem_count // 3))

    with open(OUT / "words.tsv", "w", encoding="utf-8") as fh:
        for word, count in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
            fh.write(f"{word}\t{count}\n")

    with open(OUT / "emoticons.tsv", "w", encoding="utf-8") as fh:
        for emoticon, name in EMOTICONS:
            fh.write(f"{emoticon}\t{name}\n")

    with open(OUT / "typos.tsv", "w", encoding="utf-8") as fh:
        for typo, fix in TYPOS:
            fh.write(f"{typo}\t{fix}\n")

    tags = {}
    for tag, words in POS_CLOSED.items():
        for w in words:
            tags.setdefault(w, tag)
    for w in POS_VERBS:
        tags.setdefault(w, "VERB")
    for w in POS_ADJ:
        tags.setdefault(w, "ADJ")
    for w in POS_ADV:
        tags.setdefault(w, "ADV")
    with open(OUT / "pos.tsv", "w", encoding="utf-8") as fh:
        for w in sorted(tags):
            fh.write(f"{w}\t{tags[w]}\n")

    print(f"words: {len(counts)}  pos: {len(tags)}  "
          f"emoticons: {len(EMOTICONS)}  typos: {len(TYPOS)}")


if __name__ == "__main__":
    main()
