# Generated by Django 5.1.4 on 2026-10-18 09:12

import django.core.validators
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='SolveRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('label', models.CharField(blank=True, max_length=200)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('alpha_star', models.FloatField(blank=True, null=True, validators=[django.core.validators.MinValueValidator(0.0), django.core.validators.MaxValueValidator(1.0)])),
                ('alpha', models.FloatField(validators=[django.core.validators.MinValueValidator(0.0), django.core.validators.MaxValueValidator(1.0)])),
                ('omega_count', models.PositiveIntegerField()),
                ('time_limit', models.FloatField(blank=True, null=True)),
                ('threads', models.PositiveIntegerField(default=1)),
                ('staffing', models.JSONField(default=dict)),
                ('cost', models.PositiveIntegerField()),
                ('coverage', models.FloatField()),
                ('confidence_lb', models.FloatField()),
                ('master_lower_bound', models.PositiveIntegerField()),
                ('wall_seconds', models.FloatField(default=0.0)),
                ('run_dir', models.CharField(blank=True, max_length=500)),
                ('performance', models.JSONField(blank=True, default=dict)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
            },
        ),
    ]
