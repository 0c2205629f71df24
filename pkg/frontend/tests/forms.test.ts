import { describe, expect, it } from "vitest";

import {
  alignmentFields,
  collectArgs,
  formFields,
  missingFields,
  nodeSchema,
} from "../src/forms.js";
import type { SpaceSchema } from "../src/types.js";

const emailSchema: SpaceSchema = {
  name: "email",
  description: "send email messages to contacts",
  perception_note: "",
  nodes: [
    {
      name: "send_email",
      semantic: "send an email message to a contact saying the content",
      function_binding: "email:send_email",
      perception: true,
      params: [
        { name: "address", type: "text", required: true },
        { name: "content", type: "text", required: true },
      ],
    },
  ],
};

describe("schema-derived forms", () => {
  it("derives one field per parameter with labels from names", () => {
    const node = nodeSchema(emailSchema, "send_email")!;
    const fields = formFields(node);
    expect(fields).toEqual([
      { name: "address", label: "address", inputType: "text", required: true },
      { name: "content", label: "content", inputType: "text", required: true },
    ]);
  });

  it("humanizes underscored parameter names", () => {
    const fields = formFields({
      name: "translate",
      semantic: "",
      function_binding: "x",
      perception: true,
      params: [{ name: "target_language", type: "text", required: true }],
    });
    expect(fields[0].label).toBe("target language");
  });

  it("blocks submission while required fields are empty", () => {
    const fields = formFields(nodeSchema(emailSchema, "send_email")!);
    expect(missingFields(fields, {})).toEqual(["address", "content"]);
    expect(missingFields(fields, { address: "a@b.example" })).toEqual([
      "content",
    ]);
    expect(missingFields(fields, { address: "  " })).toEqual([
      "address",
      "content",
    ]);
    expect(
      missingFields(fields, { address: "a@b.example", content: "hi" }),
    ).toEqual([]);
  });

  it("collects only known, non-empty values as args", () => {
    const fields = formFields(nodeSchema(emailSchema, "send_email")!);
    expect(
      collectArgs(fields, {
        address: " a@b.example ",
        content: "hi",
        extra: "dropped",
      }),
    ).toEqual({ address: "a@b.example", content: "hi" });
  });

  it("builds an alignment form from the missing list", () => {
    const fields = alignmentFields(["address", "target_language"]);
    expect(fields.map((f) => f.name)).toEqual(["address", "target_language"]);
    expect(fields.every((f) => f.required)).toBe(true);
    expect(missingFields(fields, { address: "x" })).toEqual([
      "target_language",
    ]);
  });

  it("unknown node name yields undefined (rendered read-only upstream)", () => {
    expect(nodeSchema(emailSchema, "nope")).toBeUndefined();
  });
});
