# Generated by Django 5.2.7 on 2026-10-17 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ScanRun",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True, primary_key=True, serialize=False, verbose_name="ID"
                    ),
                ),
                ("k", models.PositiveSmallIntegerField()),
                ("n_s", models.PositiveIntegerField()),
                ("n_theta", models.PositiveIntegerField()),
                ("config", models.JSONField(blank=True, default=dict)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
            ],
        ),
        migrations.CreateModel(
            name="BifurcationEvent",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True, primary_key=True, serialize=False, verbose_name="ID"
                    ),
                ),
                ("sequence", models.PositiveIntegerField()),
                (
                    "kind",
                    models.CharField(
                        choices=[
                            ("homoclinic_chord", "Homoclinic Chord"),
                            ("multi_loop", "Multi Loop"),
                            ("parabolic_delta", "Parabolic Delta"),
                            ("parabolic_eps0", "Parabolic Eps0"),
                            ("diagnostic", "Diagnostic"),
                        ],
                        max_length=32,
                    ),
                ),
                ("k", models.PositiveSmallIntegerField()),
                ("s", models.FloatField()),
                ("theta", models.FloatField()),
                ("alpha", models.FloatField()),
                ("data", models.JSONField(blank=True, default=dict)),
                (
                    "run",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="events",
                        to="vfield_app.scanrun",
                    ),
                ),
            ],
            options={
                "ordering": ["run", "sequence"],
                "unique_together": {("run", "sequence")},
            },
        ),
    ]
