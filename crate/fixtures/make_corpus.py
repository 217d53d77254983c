"""Write the synthetic JATS corpus under corpus/ and its ground truth.

The truth file records, for each article, the intended discipline of every
reference (with all matching stages, and with direct lookup only), the hand
label of every first-level section, and the word count of every citing
sentence computed here from the sentence text. Run from this directory:

    python3 make_corpus.py
"""

import json
import re
from pathlib import Path
from xml.sax.saxutils import escape

HERE = Path(__file__).resolve().parent
OUT = HERE / "corpus"

DOCTYPE = (
    '<!DOCTYPE article PUBLIC "-//NLM//DTD JATS (Z39.96) Journal Archiving and '
    'Interchange DTD v1.1 20151215//EN" "JATS-archivearticle1.dtd">'
)

CITE = re.compile(r"\{([A-Z0-9 ]+)\}")


def words_in(sentence):
    """Tokens with a letter or digit once the citation placeholders are gone."""
    plain = CITE.sub(lambda m: "[]", sentence)
    n = sum(1 for tok in plain.split() if any(c.isalnum() for c in tok))
    return max(n, 1)


def ref(rid, name, discipline, stage1=None, kind="journal"):
    """discipline: with the full cascade; stage1: with direct lookup only."""
    journal = kind in ("journal", "jounal")
    return {"id": rid, "type": kind, "journal": journal, "name": name, "full": discipline, "stage1": stage1}


def render_sentence(sentence, numbers):
    def xref(m):
        rids = m.group(1).split()
        label = ",".join(str(numbers.get(r, 99)) for r in rids)
        return '[<xref ref-type="bibr" rid="%s">%s</xref>]' % (" ".join(rids), label)

    return CITE.sub(xref, escape(sentence))


def build(article):
    numbers = {r["id"]: i + 1 for i, r in enumerate(article["refs"])}
    known = set(numbers)
    body = []
    truth_sections = []
    mentions = []
    for index, sec in enumerate(article["sections"]):
        heading = sec.get("heading")
        truth_sections.append({"heading": heading or "", "type": sec["type"]})

        def paragraphs(paras):
            out = []
            for para in paras:
                for sentence in para:
                    for m in CITE.finditer(sentence):
                        for rid in m.group(1).split():
                            if rid in known:
                                mentions.append({"ref": rid, "section": index, "words": words_in(sentence)})
                out.append("<p>%s</p>" % " ".join(render_sentence(s, numbers) for s in para))
            return "".join(out)

        inner = paragraphs(sec["paras"])
        for sub_title, sub_paras in sec.get("subsections", []):
            inner += '<sec><title>%s</title>%s</sec>' % (escape(sub_title), paragraphs(sub_paras))
        if heading is None:
            body.append(inner)
        else:
            body.append('<sec id="s%d"><title>%s</title>%s</sec>' % (index + 1, escape(heading), inner))

    refs_xml = []
    for r in article["refs"]:
        refs_xml.append(
            '<ref id="%s"><label>%d</label><element-citation publication-type="%s">'
            "<person-group person-group-type=\"author\"><name><surname>Author</surname>"
            "<given-names>A</given-names></name></person-group>"
            "<article-title>Cited work %s</article-title><source>%s</source>"
            "<year>2010</year><volume>1</volume><fpage>1</fpage></element-citation></ref>"
            % (r["id"], numbers[r["id"]], r["type"], r["id"], escape(r["name"]))
        )
    xml = (
        '<?xml version="1.0" encoding="UTF-8"?>\n%s\n'
        '<article xmlns:xlink="http://www.w3.org/1999/xlink" article-type="research-article">\n'
        "<front><journal-meta><journal-title-group><journal-title>Synthetic Journal</journal-title>"
        "</journal-title-group></journal-meta><article-meta>"
        '<article-id pub-id-type="doi">%s</article-id>'
        "<title-group><article-title>%s</article-title></title-group></article-meta></front>\n"
        "<body>\n%s\n</body>\n<back><ref-list><title>References</title>%s</ref-list></back>\n</article>\n"
    ) % (DOCTYPE, article["doi"], escape(article["title"]), "\n".join(body), "".join(refs_xml))
    truth = {
        "file": article["file"],
        "doi": article["doi"],
        "references": article["refs"],
        "sections": truth_sections,
        "mentions": mentions,
    }
    return xml, truth


UNKNOWN = [
    "Regional Bulletin of Hypothetical Studies",
    "Obscure Proceedings in Imaginary Fields",
    "Quarterly Gazette of Unlisted Research",
    "Annals of the Fictional Society",
]

ARTICLES = [
    {
        "file": "a01.xml",
        "doi": "10.9999/synthetic.0001",
        "title": "Outcomes of a multicentre clinical cohort",
        "refs": [
            ref("B1", "Lancet", "Medicine", "Medicine"),
            ref("B2", "New England Journal of Medicine", "Medicine", "Medicine"),
            ref("B3", "N. Engl. J. Med.", "Medicine"),
            ref("B4", "JAMA", "Medicine", "Medicine"),
            ref("B5", "BMJ", "Medicine", "Medicine"),
            ref("B6", "Cell", "Biochem Mol Biol", "Biochem Mol Biol"),
            ref("B7", "Nature", "Multidisciplinary", "Multidisciplinary"),
            ref("B8", "J. Biol. Chem.", "Biochem Mol Biol"),
            ref("B9", "Science", "Multidisciplinary", "Multidisciplinary"),
            ref("B10", "Annals of Internal Medicine", "Medicine", "Medicine"),
        ],
        "sections": [
            {
                "heading": "Introduction",
                "type": "I",
                "paras": [
                    [
                        "Chronic disease burden keeps rising in ageing populations {B1}.",
                        "Earlier cohorts reported mixed findings {B2} {B3}.",
                        "Smith et al. reported similar values in a smaller sample {B4}.",
                    ],
                    ["Molecular mechanisms remain unclear {B6 B8}.", "We address this gap here."],
                ],
            },
            {
                "heading": "Materials and Methods",
                "type": "M",
                "paras": [["Participants were recruited from twelve hospitals {B1}."]],
                "subsections": [
                    (
                        "Statistical analysis",
                        [["Models followed a published protocol {B5}.", "Doses of 3.5 mg were recorded {B10}."]],
                    )
                ],
            },
            {
                "heading": "Results",
                "type": "R",
                "paras": [
                    [
                        "As shown in Fig. 2, the effect was robust {B7}.",
                        "Both {B1} and {B9} describe the same trend.",
                    ]
                ],
            },
            {
                "heading": "Discussion",
                "type": "D",
                "paras": [
                    [
                        "Our estimates agree with large trials {B1}.",
                        "Differences may reflect case mix {B2}.",
                        "Cellular models support this view {B6}.",
                        "One cited report was withdrawn {B99}.",
                    ]
                ],
            },
            {
                "heading": "Acknowledgments",
                "type": "Excluded",
                "paras": [["We thank the staff who shared data {B4}."]],
            },
        ],
    },
    {
        "file": "a02.xml",
        "doi": "10.9999/synthetic.0002",
        "title": "Cortical activity during sustained attention",
        "refs": [
            ref("B1", "Journal of Neuroscience", "Neuroscience", "Neuroscience"),
            ref("B2", "Neuron", "Neuroscience", "Neuroscience"),
            ref("B3", "J Neurosci", "Neuroscience"),
            ref("B4", "Jounral of Neuroscience", "Neuroscience"),
            ref("B5", "Nature", "Multidisciplinary", "Multidisciplinary"),
            ref("B6", "Science", "Multidisciplinary", "Multidisciplinary"),
            ref("B7", "PLoS ONE", "Multidisciplinary", "Multidisciplinary"),
            ref("B8", "Psychological Science", "Psychology", "Psychology"),
        ],
        "sections": [
            {
                "heading": "Background",
                "type": "I",
                "paras": [
                    [
                        "Attention shapes cortical responses {B1}.",
                        "Population codes change with arousal (e.g. pupil size) {B2}.",
                        "Behavioural work points the same way {B8}.",
                    ],
                    ["{B3}"],
                ],
            },
            {
                "heading": "Methods",
                "type": "M",
                "paras": [["Recordings followed standard procedures {B4}.", "Spikes were sorted offline {B4}."]],
            },
            {
                "heading": "Results and Discussion",
                "type": "RD",
                "paras": [
                    [
                        "Firing rates rose in attended trials {B5}.",
                        "This matches earlier imaging {B6} and large surveys {B7}.",
                        "Attention effects were weaker than reported {B1}.",
                    ]
                ],
            },
            {
                "heading": "Conclusions",
                "type": "D",
                "paras": [["Sustained attention recruits distributed circuits {B2 B3}."]],
            },
        ],
    },
    {
        "file": "a03.xml",
        "doi": "10.9999/synthetic.0003",
        "title": "Spectral bounds for sparse random operators",
        "refs": [
            ref("B1", "Ann. Math.", "Mathematics"),
            ref("B2", "Bioinformatcs", "Mathematics"),
            ref("B3", "Phys. Rev. Lett.", "Physics"),
            ref("B4", "Physical Reveiw Letters", "Physics"),
            ref(
                "B5",
                "Proceedings of the National Academy of Sciences of the United States of America",
                "Multidisciplinary",
                "Multidisciplinary",
            ),
            ref("B6", "Nature", "Multidisciplinary", "Multidisciplinary"),
            ref("B7", "Science", "Multidisciplinary", "Multidisciplinary"),
            ref("B8", "Cell", "Biochem Mol Biol", "Biochem Mol Biol"),
            ref("B9", "PLoS ONE", "Multidisciplinary", "Multidisciplinary"),
            ref("B10", "Numerical Recipes", None, None, kind="book"),
        ],
        "sections": [
            {
                "heading": "1. Introduction",
                "type": "I",
                "paras": [
                    [
                        "Sparse random operators appear across physics {B3}.",
                        "Their spectra were bounded only in special cases {B1}.",
                        "Applications include sequence analysis {B2}.",
                    ]
                ],
            },
            {
                "heading": "2. Methods",
                "type": "M",
                "paras": [["We use the moment method {B1}.", "Numerical checks follow standard routines {B10}."]],
            },
            {
                "heading": "3. Results",
                "type": "R",
                "paras": [
                    [
                        "The bound holds for all tested sizes {B4}.",
                        "It improves earlier estimates {B5} by a constant factor.",
                    ]
                ],
            },
            {
                "heading": "4. Discussion",
                "type": "D",
                "paras": [
                    [
                        "Similar ideas appear in biology {B8} and network science {B6}.",
                        "Open problems remain {B7} {B9}.",
                        "Physical realizations are discussed elsewhere {B3}.",
                    ]
                ],
            },
        ],
    },
    {
        "file": "a04.xml",
        "doi": "10.9999/synthetic.0004",
        "title": "T cell memory after repeated exposure",
        "refs": [
            ref("B1", "Journal of Immunology", "Immunology", "Immunology"),
            ref("B2", "Immunity", "Immunology", "Immunology"),
            ref("B3", "J Immunol", "Immunology"),
            ref("B4", "Cell", "Biochem Mol Biol", "Biochem Mol Biol"),
            ref("B5", "Nature", "Multidisciplinary", "Multidisciplinary"),
            ref("B6", "Lancet", "Medicine", "Medicine"),
        ],
        "sections": [
            {
                "heading": "Introduction",
                "type": "I",
                "paras": [
                    [
                        "Memory T cells protect against reinfection {B1}.",
                        "Their maintenance depends on cytokines {B2}.",
                        "Clinical relevance is well documented {B6}.",
                    ]
                ],
            },
            {
                "heading": "Materials and Methods",
                "type": "M",
                "paras": [["Mice were immunized as described {B3}.", "Flow cytometry used standard panels {B3}."]],
            },
            {
                "heading": "Results",
                "type": "R",
                "paras": [["Memory pools expanded after each boost {B4}.", "Transcript profiles shifted {B5}."]],
            },
            {
                "heading": "Discussion",
                "type": "D",
                "paras": [["These data extend earlier work {B1} {B2}.", "Translation to patients is pending {B6}."]],
            },
            {
                "heading": "Supporting Information",
                "type": "Excluded",
                "paras": [["Additional panels are available {B5}."]],
            },
        ],
    },
    {
        "file": "a05.xml",
        "doi": "10.9999/synthetic.0005",
        "title": "Structure of a bacterial helicase complex",
        "refs": [
            ref("B1", "Journal of Biological Chemistry", "Biochem Mol Biol", "Biochem Mol Biol"),
            ref("B2", "Molecular Cell", "Biochem Mol Biol", "Biochem Mol Biol"),
            ref("B3", "Nucleic Acids Res.", "Biochem Mol Biol"),
            ref("B4", "Nucleic Acid Research", "Biochem Mol Biol"),
            ref("B5", "Cell", "Biochem Mol Biol", "Biochem Mol Biol"),
            ref("B6", UNKNOWN[0], None, None),
            ref("B7", "Nature", "Multidisciplinary", "Multidisciplinary"),
            ref("B8", "Science", "Multidisciplinary", "Multidisciplinary"),
        ],
        "sections": [
            {
                "heading": "Introduction",
                "type": "I",
                "paras": [
                    [
                        "Helicases unwind duplex DNA {B1}.",
                        "Several structures are known {B2} {B5}.",
                        "Regional surveys noted related enzymes {B6}.",
                    ]
                ],
            },
            {
                "heading": "Experimental Procedures",
                "type": "Unclassified",
                "paras": [["Proteins were purified by affinity chromatography {B3}."]],
            },
            {
                "heading": "Results",
                "type": "R",
                "paras": [
                    [
                        "The complex binds forked substrates {B4}.",
                        "Unwinding rates matched published values {B1}.",
                        "Mutants lost activity {B4}.",
                    ]
                ],
            },
            {
                "heading": "Discussion",
                "type": "D",
                "paras": [["Our model reconciles conflicting reports {B7} {B8}.", "Further work is needed {B2}."]],
            },
        ],
    },
    {
        "file": "a06.xml",
        "doi": "10.9999/synthetic.0006",
        "title": "Catalytic removal of nitrate from groundwater",
        "refs": [
            ref("B1", "Journal of the American Chemical Society", "Chemistry", "Chemistry"),
            ref("B2", "J. Am. Chem. Soc.", "Chemistry"),
            ref("B3", "Environmental Science and Technology", "Environmental", "Environmental"),
            ref("B4", "Environ. Sci. Technol.", "Environmental"),
            ref("B5", "Science", "Multidisciplinary", "Multidisciplinary"),
            ref("B6", "Nature", "Multidisciplinary", "Multidisciplinary"),
            ref("B7", "PNAS", "Multidisciplinary"),
            ref("B8", "World Health Organization drinking water guidelines", None, None, kind="other"),
        ],
        "sections": [
            {
                "heading": "Introduction",
                "type": "I",
                "paras": [
                    [
                        "Nitrate contamination affects many aquifers {B3} {B8}.",
                        "Catalytic reduction is a promising route {B1}.",
                    ]
                ],
            },
            {
                "heading": "Methods",
                "type": "M",
                "paras": [["Catalysts were prepared by impregnation {B2}.", "Batch tests followed {B4}."]],
            },
            {
                "heading": "Results",
                "type": "R",
                "paras": [["Removal exceeded ninety percent {B5}.", "Selectivity toward nitrogen was high {B2}."]],
            },
            {
                "heading": "Discussion",
                "type": "D",
                "paras": [["Field deployment remains costly {B6} {B7}.", "Regulation sets the targets {B8}."]],
            },
            {
                "heading": "Funding",
                "type": "Excluded",
                "paras": [["Support came from a public grant {B1}."]],
            },
        ],
    },
    {
        "file": "a07.xml",
        "doi": "10.9999/synthetic.0007",
        "title": "Neighbourhood deprivation and self-rated health",
        "refs": [
            ref("B1", "Social Science and Medicine", "Social", "Social"),
            ref("B2", "Psychological Science", "Psychology", "Psychology"),
            ref("B3", "Lancet", "Medicine", "Medicine", kind="jounal"),
            ref("B4", "BMJ", "Medicine", "Medicine"),
            ref("B5", "JAMA", "Medicine", "Medicine"),
        ],
        "sections": [
            {
                "heading": None,
                "type": "Unclassified",
                "paras": [["Area effects on health are debated {B1}."]],
            },
            {
                "heading": "Introduction",
                "type": "I",
                "paras": [["Deprivation predicts poor health {B1}.", "Perception also matters {B2}."]],
            },
            {
                "heading": "Methods",
                "type": "M",
                "paras": [["Survey weights followed national guidance {B4}."]],
            },
            {
                "heading": "Results",
                "type": "R",
                "paras": [["Self-rated health declined with deprivation {B3}.", "Effects were larger for men {B5}."]],
            },
            {
                "heading": "Discussion",
                "type": "D",
                "paras": [
                    [
                        "The gradient is consistent with prior reviews {B3}.",
                        "Psychological pathways deserve study {B2}.",
                        "Policy implications are discussed elsewhere {B1}.",
                    ]
                ],
            },
        ],
    },
    {
        "file": "a08.xml",
        "doi": "10.9999/synthetic.0008",
        "title": "An essay citing mostly unlisted venues",
        "refs": [
            ref("B1", "Nature", "Multidisciplinary", "Multidisciplinary"),
            ref("B2", "Cell", "Biochem Mol Biol", "Biochem Mol Biol"),
            ref("B3", UNKNOWN[0], None, None),
            ref("B4", UNKNOWN[1], None, None),
            ref("B5", UNKNOWN[2], None, None),
            ref("B6", UNKNOWN[3], None, None),
        ],
        "sections": [
            {
                "heading": "Introduction",
                "type": "I",
                "paras": [["Few venues cover this topic {B1} {B3}.", "Some are regional {B4}."]],
            },
            {
                "heading": "Discussion",
                "type": "D",
                "paras": [["The literature is scattered {B2} {B5} {B6}."]],
            },
        ],
    },
    {
        "file": "a09.xml",
        "doi": "10.9999/synthetic.0009",
        "title": "A review leaning on textbooks",
        "refs": [
            ref("B1", "Nature", "Multidisciplinary", "Multidisciplinary"),
            ref("B2", "Science", "Multidisciplinary", "Multidisciplinary"),
            ref("B3", "Cell", "Biochem Mol Biol", "Biochem Mol Biol"),
            ref("B4", "Lancet", "Medicine", "Medicine"),
            ref("B5", "Principles of Biochemistry", None, None, kind="book"),
        ],
        "sections": [
            {
                "heading": "Introduction",
                "type": "I",
                "paras": [["Textbooks summarize the field {B5}.", "Primary work is cited too {B1} {B2}."]],
            },
            {
                "heading": "Discussion",
                "type": "D",
                "paras": [["Clinical and molecular views differ {B3} {B4}."]],
            },
        ],
    },
]


def main():
    OUT.mkdir(exist_ok=True)
    truth = []
    for article in ARTICLES:
        xml, t = build(article)
        (OUT / article["file"]).write_text(xml, encoding="utf-8")
        t["status"] = "parsed"
        truth.append(t)
    broken = (
        '<?xml version="1.0" encoding="UTF-8"?>\n<article><front><article-meta>'
        '<article-id pub-id-type="doi">10.9999/synthetic.0010</article-id></article-meta></front>'
        "<body><sec><title>Introduction</title><p>Truncated text [<xref ref-type=\"bibr\" rid=\"B1\">1</xref>"
    )
    (OUT / "a10.xml").write_text(broken, encoding="utf-8")
    truth.append({"file": "a10.xml", "status": "MalformedXml"})
    (HERE / "corpus_truth.json").write_text(json.dumps(truth, indent=1) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
