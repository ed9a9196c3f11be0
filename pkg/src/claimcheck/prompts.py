"""Versioned prompt templates for graph construction and query refinement.

These are repo artifacts: changing them changes engine behavior, so the
golden-file tests pin their rendered output.  The graph prompts instruct the
strict JSON schema that :func:`claimcheck.ergraph.parse_graph` enforces.
"""

from __future__ import annotations

PROMPT_VERSION = "1"

_SCHEMA_BLOCK = """\
Reply with a single JSON object and nothing else, in this exact schema:
{
  "nodes": [
    {"id": "<unique-slug>", "name": "<entity surface form>",
     "ent_type": "PERSON|ORG|LOCATION|DATE|EVENT|OBJECT|MISC",
     "description": "<what this entity means in this text>",
     "location_data": {"city": "...", "state": "...", "country": "..."},
     "date_data": {"day": 1, "month": 1, "year": 2000}}
  ],
  "edges": [
    {"src": "<node id>", "dst": "<node id>",
     "action": "<verb phrase copied verbatim from the text>",
     "action_description": "<your own paraphrase of the action>"}
  ]
}
Rules:
- Nodes are the named entities of the text; every node needs a non-empty name
  and a contextual description.
- location_data only on LOCATION nodes, as a (city, state, country) hierarchy;
  date_data only on DATE nodes, as (day, month, year). Write "UNK" for any
  level the text does not give, but never all three.
- Edges connect two different existing node ids; the action must be extractive
  (verbatim from the text) and the action_description abstractive.
- Connect every LOCATION and DATE node to the entity or event it
  contextualizes. No duplicate (src, dst, action) triples."""

_EXAMPLE_BLOCK = """\
Example text: "Protesters marched in Girona on 12 May 2019."
Example reply:
{
  "nodes": [
    {"id": "protesters", "name": "Protesters", "ent_type": "ORG",
     "description": "group of demonstrators"},
    {"id": "girona", "name": "Girona", "ent_type": "LOCATION",
     "description": "Catalan city where the march took place",
     "location_data": {"city": "Girona", "state": "Catalonia", "country": "Spain"}},
    {"id": "date-2019-05-12", "name": "12 May 2019", "ent_type": "DATE",
     "description": "day of the march",
     "date_data": {"day": 12, "month": 5, "year": 2019}}
  ],
  "edges": [
    {"src": "protesters", "dst": "girona", "action": "marched in",
     "action_description": "held a demonstration at"},
    {"src": "protesters", "dst": "date-2019-05-12", "action": "marched",
     "action_description": "demonstrated on this day"}
  ]
}"""

BUILD_GRAPH_TEMPLATE = f"""\
[claimcheck build-graph v{PROMPT_VERSION}]
You extract entity-relationship graphs from news-style text. Identify the
named entities and the actions or relationships connecting them.

{_SCHEMA_BLOCK}

{_EXAMPLE_BLOCK}

Text:
\"\"\"{{text}}\"\"\"
{{feedback}}"""

BUILD_GRAPH_CONDITIONAL_TEMPLATE = f"""\
[claimcheck build-graph-conditional v{PROMPT_VERSION}]
You extract an entity-relationship graph from evidence text, conditioned on
the entities of a claim. Focus the extraction on the given claim entities.
For each masked pair below, if the evidence text connects those two
entities, emit an edge between them and predict its action (verbatim from
the evidence text) and your own description of it. You may add further
nodes and edges the evidence text supports. Claim entities that the
evidence text mentions must appear as nodes; omit claim entities the text
never refers to.

Claim entities:
{{nodes}}

Masked pairs to check:
{{masked_pairs}}

{_SCHEMA_BLOCK}

Evidence text:
\"\"\"{{text}}\"\"\"
{{feedback}}"""

REFINE_QUERY_TEMPLATE = f"""\
[claimcheck refine-query v{PROMPT_VERSION}]
A web search for evidence images did not return a match. Propose one
improved search query, as plain text on a single line, different from the
prior query. Prefer adding the named entities listed under "unmatched" and
entities of the types suggested by the failing visual channels
(place -> LOCATION, faces -> PERSON, semantic/objects -> EVENT or OBJECT).

Prior query: {{prior_query}}
Failing visual channels: {{failed_channels}}
Unmatched claim entities: {{unmatched_entities}}
All claim entities: {{all_entities}}

New query:"""

RETRY_FEEDBACK_TEMPLATE = """

Your previous reply was rejected: {violation}
Fix this and reply again with a single JSON object in the required schema."""
