"""Walk through the semantic-unit representation of a caption.

A caption is decomposed into object-attribute edges and arranged as a
three-level tree (virtual image root -> objects -> attribute edges). The
edge count is the comprehensiveness measure used everywhere else.
"""

from annochain import DuplicationMatcher, build_tree, residual, tree_to_json, unit_count
from annochain.gateway import parse_caption

caption = ("the car is black. the car in the top left corner. "
           "two trees. the bridge is concrete. a road.")

units = parse_caption(caption)
print("caption:", caption)
print("\nextracted units:")
for u in units:
    print(f"  {u.object_name:<8} {u.kind.value:<20} {u.value}")

tree = build_tree(units)
print("\ntree document:")
for obj in tree_to_json(tree):
    print(" ", obj)
print("\nunit count:", unit_count(tree))
# the bare "a road." counts as one implicit existence edge

# A second annotator repeats one thing and adds two more; the residual is
# what they actually contributed.
followup = parse_caption("two trees. the road is wide. the car is parked.")
new = residual(tree, build_tree(followup), DuplicationMatcher(mode="exact"))
print("\nresidual of the follow-up round:")
for u in new:
    print(f"  {u.object_name:<8} {u.kind.value:<20} {u.value}")
