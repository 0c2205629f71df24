// Schema-derived forms: the only per-space UI. Field descriptors come straight
// from a space's node parameter schema; validation mirrors the server's
// required-parameter rule so a partial submit is blocked client-side.

import type { NodeSchema, SpaceSchema } from "./types.js";

export interface FieldSpec {
  name: string;
  label: string;
  inputType: "text" | "textarea" | "number";
  required: boolean;
}

const TYPE_TO_INPUT: Record<string, FieldSpec["inputType"]> = {
  text: "text",
  number: "number",
  body: "textarea",
};

export function nodeSchema(
  schema: SpaceSchema,
  nodeName: string,
): NodeSchema | undefined {
  return schema.nodes.find((n) => n.name === nodeName);
}

export function formFields(node: NodeSchema): FieldSpec[] {
  return node.params.map((param) => ({
    name: param.name,
    label: param.name.replace(/_/g, " "),
    inputType: TYPE_TO_INPUT[param.type] ?? "text",
    required: param.required,
  }));
}

/** Empty required fields, in schema order. Empty list means submittable. */
export function missingFields(
  fields: FieldSpec[],
  values: Record<string, string>,
): string[] {
  return fields
    .filter((f) => f.required && !(values[f.name] ?? "").trim())
    .map((f) => f.name);
}

/** Drop unknown keys and empty optionals so the server sees a clean args dict. */
export function collectArgs(
  fields: FieldSpec[],
  values: Record<string, string>,
): Record<string, string> {
  const args: Record<string, string> = {};
  for (const field of fields) {
    const value = (values[field.name] ?? "").trim();
    if (value) args[field.name] = value;
  }
  return args;
}

/** Form spec for an alignment request: one required text field per missing param. */
export function alignmentFields(missing: string[]): FieldSpec[] {
  return missing.map((name) => ({
    name,
    label: name.replace(/_/g, " "),
    inputType: "text",
    required: true,
  }));
}
